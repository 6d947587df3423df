use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use taxben_core::config::{apply_overrides, load_run_config, LoadedConfig};
use taxben_core::measures::{SectorGroups, SECTOR_GROUPS_FILE};
use taxben_core::population::{load_population, reweight, write_population, ReweightTargets};
use taxben_core::report::{self, write_report};
use taxben_core::scenario::{self, ColumnLabel, ColumnSpec, Inputs, Metric, RunContext};
use taxben_core::shock::{SectorImpactTable, SECTORS_FILE};
use taxben_core::synth::{generate, SynthParams};
use taxben_core::{Error, ErrorClass, Population};


#[derive(Parser, Debug)]
#[command(name = "taxben", version, about = "Static tax-benefit microsimulation of a crisis income shock")]
struct Cli {
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the seven-column counterfactual and write all tables.
    Simulate(RunArgs),
    /// Repeat the column matrix for every configured crisis duration.
    Bounds(RunArgs),
    /// Regress simulated sector wage declines on the observed ones.
    ValidateFit(RunArgs),
    /// Generate a synthetic population from a parameter file.
    Synth(SynthArgs),
    /// Rake household weights to population margins.
    Reweight(ReweightArgs),
    /// Validate configuration and inputs without simulating.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    input_dir: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// `section.key=value`, applied over the config file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "2019")]
    reference_year: String,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    input_dir: PathBuf,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "2019")]
    reference_year: String,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Generator parameter file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct ReweightArgs {
    #[arg(long)]
    input_dir: PathBuf,
    /// Margin targets file.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value = "2019")]
    reference_year: String,
}

struct Loaded {
    config: LoadedConfig,
    pop: Population,
    table: SectorImpactTable,
    groups: SectorGroups,
}

impl Loaded {
    fn inputs(&self) -> Inputs<'_> {
        Inputs { pop: &self.pop, table: &self.table, groups: &self.groups }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn load_inputs(config: &Path, input_dir: &Path, overrides: &[String], year: &str) -> Result<Loaded, Error> {
    let config = load_run_config(&read_text(config)?, overrides)?;
    let pop = load_population(input_dir, year)?;
    let table = SectorImpactTable::load(&input_dir.join(SECTORS_FILE))?;
    let groups_path = input_dir.join(SECTOR_GROUPS_FILE);
    let groups = if groups_path.exists() { SectorGroups::load(&groups_path)? } else { SectorGroups::default() };
    table.check_covers(&pop)?;
    Ok(Loaded { config, pop, table, groups })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every report plus a manifest naming the config hash, the seed and
/// a digest of each file.
struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<(String, String)>,
    notes: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Outputs { dir, files: Vec::new(), notes: Vec::new() }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        write_report(self.dir, name, contents)?;
        self.files.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    fn finish(mut self, command: &str, config_text: &str, seed: u64) -> Result<(), Error> {
        self.files.sort();
        let files: serde_json::Map<String, serde_json::Value> =
            self.files.into_iter().map(|(n, h)| (n, serde_json::Value::String(h))).collect();
        let manifest = serde_json::json!({
            "command": command,
            "config_sha256": sha256_hex(config_text.as_bytes()),
            "seed": seed,
            "files": files,
            "notes": self.notes,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        write_report(self.dir, &format!("manifest_{command}.json"), &text)
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn simulate(args: &RunArgs, quiet: bool) -> Result<(), Error> {
    let l = load_inputs(&args.config, &args.input_dir, &args.overrides, &args.reference_year)?;
    let run = &l.config.run;
    let t2 = scenario::run_table2(l.inputs(), run)?;
    let t3 = scenario::run_table3(&l.pop, &t2)?;

    let mut out = Outputs::new(&args.output_dir);
    out.write(report::TABLE2_FILE, &report::metric_table_csv(&t2.reports()))?;
    for (name, table) in [("women", &t3.women), ("youth", &t3.youth)] {
        match table {
            Some(rows) => out.write(&report::table3_file(name), &report::metric_table_csv(&rows.iter().collect::<Vec<_>>()))?,
            None => out.notes.push(format!("group {name} has no members; table not written")),
        }
    }
    out.write(report::DECILES_FILE, &report::deciles_csv(&t2.deciles))?;
    out.write(report::BUDGET_FILE, &report::budget_csv(&t2.budget, run.policy.conversion.eur_mkd))?;
    let notes = out.notes.clone();
    out.finish("simulate", &l.config.resolved_text, run.scenario.seed)?;

    if !quiet {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "households {} persons {:.0} crisis_months {} job_loss_share {:.4}",
            l.pop.households().len(),
            l.pop.weighted_persons().to_f64(),
            run.scenario.crisis_months,
            t2.draw.mass_share
        );
        let _ = write!(s, "{:<22}", "metric");
        for lab in ColumnLabel::TABLE2 {
            let _ = write!(s, " {:>15}", lab.as_str());
        }
        s.push('\n');
        for m in Metric::ALL {
            let _ = write!(s, "{:<22}", m.as_str());
            for r in t2.reports() {
                let v = m.of(r);
                let cell = if m == Metric::Gini { format!("{v:.4}") } else { pct(v) };
                let _ = write!(s, " {cell:>15}");
            }
            s.push('\n');
        }
        let eur = run.policy.conversion.eur_mkd;
        let total = t2.budget.total.round_to_mkd().to_f64();
        let _ = writeln!(s, "budget total {:.0} MKD ({:.0} EUR)", total, total / eur);
        if let Some(cr) = t2.deciles.all.record.cr_total {
            let _ = writeln!(s, "mean compensation rate {}", pct(cr));
        }
        for n in notes {
            let _ = writeln!(s, "note: {n}");
        }
        print!("{s}");
    }
    Ok(())
}

fn bounds(args: &RunArgs, quiet: bool) -> Result<(), Error> {
    let l = load_inputs(&args.config, &args.input_dir, &args.overrides, &args.reference_year)?;
    let run = &l.config.run;
    let b = scenario::run_bounds(l.inputs(), run)?;
    let mut out = Outputs::new(&args.output_dir);
    out.write(report::BOUNDS_FILE, &report::bounds_csv(&b))?;
    out.finish("bounds", &l.config.resolved_text, run.scenario.seed)?;
    if !quiet {
        let raw = ColumnLabel::TABLE2.iter().position(|&c| c == ColumnLabel::ShockRaw).expect("shock_raw column");
        let total = ColumnLabel::TABLE2.len() - 1;
        for m in Metric::ALL {
            let (r, t) = (b.band(m, raw), b.band(m, total));
            println!(
                "{:<22} shock_raw [{:.4}, {:.4}] total [{:.4}, {:.4}]",
                m.as_str(),
                r.min,
                r.max,
                t.min,
                t.max
            );
        }
    }
    Ok(())
}

fn validate_fit(args: &RunArgs, quiet: bool) -> Result<(), Error> {
    let l = load_inputs(&args.config, &args.input_dir, &args.overrides, &args.reference_year)?;
    let run = &l.config.run;
    let ctx = RunContext::new(l.inputs(), run)?;
    let raw = ctx.run_column(ColumnSpec::of(ColumnLabel::ShockRaw))?;
    let simulated = scenario::simulated_sector_declines(&l.pop, &raw);
    let fit = scenario::validation_fit(&l.table, &simulated)?;
    let mut out = Outputs::new(&args.output_dir);
    out.write(report::FIT_FILE, &report::fit_csv(&fit))?;
    out.finish("validate-fit", &l.config.resolved_text, run.scenario.seed)?;
    if !quiet {
        println!(
            "sectors {} slope {:.4} intercept {:.4} r_squared {:.4} slope_distance_from_one {:.4}",
            fit.n_sectors,
            fit.slope,
            fit.intercept,
            fit.r_squared,
            fit.slope_distance_from_one()
        );
    }
    Ok(())
}

fn synth(args: &SynthArgs, quiet: bool) -> Result<(), Error> {
    let text = apply_overrides(&read_text(&args.config)?, &args.overrides)?;
    let params = SynthParams::from_toml_str(&text)?;
    let pop = generate(&params)?;
    write_population(&pop, &args.output_dir)?;
    if !quiet {
        println!(
            "households {} individuals {} weighted_persons {:.0}",
            pop.households().len(),
            pop.individuals().len(),
            pop.weighted_persons().to_f64()
        );
    }
    Ok(())
}

fn reweight_cmd(args: &ReweightArgs, quiet: bool) -> Result<(), Error> {
    let targets = ReweightTargets::from_toml_str(&read_text(&args.targets)?)?;
    let pop = load_population(&args.input_dir, &args.reference_year)?;
    let raked = reweight(&pop, &targets)?;
    write_population(&raked, &args.output_dir)?;
    if !quiet {
        println!(
            "households {} weighted_persons {:.0} -> {:.0}",
            raked.households().len(),
            pop.weighted_persons().to_f64(),
            raked.weighted_persons().to_f64()
        );
    }
    Ok(())
}

fn check(args: &CheckArgs, quiet: bool) -> Result<(), Error> {
    let l = load_inputs(&args.config, &args.input_dir, &args.overrides, &args.reference_year)?;
    if !quiet {
        println!(
            "ok households {} individuals {} sectors {}",
            l.pop.households().len(),
            l.pop.individuals().len(),
            l.table.len()
        );
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let q = cli.quiet;
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, q),
        Command::Bounds(a) => bounds(a, q),
        Command::ValidateFit(a) => validate_fit(a, q),
        Command::Synth(a) => synth(a, q),
        Command::Reweight(a) => reweight_cmd(a, q),
        Command::Check(a) => check(a, q),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (module, op) = e.origin();
            eprintln!(
                "error module={module} op={op} record={} message={}",
                e.record().unwrap_or_else(|| "-".into()).replace(' ', "_"),
                one_line(&e.to_string())
            );
            ExitCode::from(match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Config => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
