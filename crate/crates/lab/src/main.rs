use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paoi_lab::sweep::thread_count;
use paoi_lab::{presets, run_sweep, Engine, LabConfig, LabError, Result, RowWriter, RunOptions};

#[derive(Parser)]
#[command(name = "paoi-lab", version, about = "Mean activity and peak AoI sweeps for clustered UAV uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write CSV (the default).
    Run(RunArgs),
    /// List preset names.
    Presets,
    /// Print a preset as a run file.
    ShowPreset { name: String },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Run file with `section.key = value` lines.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a named preset.
    #[arg(long)]
    preset: Option<String>,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<u32>,
    #[arg(long)]
    slots: Option<u64>,
    /// Comma-separated subset of analytic,simulation.
    #[arg(long)]
    engines: Option<String>,
    /// Override one key, e.g. `--set channel.theta=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Fill the runtime_s column.
    #[arg(long)]
    timings: bool,
    /// No progress or summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn load_config(a: &RunArgs) -> Result<LabConfig> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Io { context: format!("reading {}", path.display()), source: e })?;
            LabConfig::parse(&text)?
        }
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| LabError::config("--preset", format!("unknown preset `{name}`; try `paoi-lab presets`")))?,
        (None, None) => LabConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.sim.seed = seed;
    }
    if let Some(n) = a.realizations {
        cfg.sim.realizations = n;
    }
    if let Some(n) = a.slots {
        cfg.sim.slots = n;
    }
    if let Some(list) = &a.engines {
        cfg.sweep.engines = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Engine::from_name(s).ok_or_else(|| LabError::config("--engines", format!("unknown engine `{s}`"))))
            .collect::<Result<_>>()?;
    }
    for s in &a.sets {
        cfg.set(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: &RunArgs) -> Result<()> {
    let cfg = load_config(a)?;
    let out: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path)
                .map_err(|e| LabError::Io { context: format!("creating {}", path.display()), source: e })?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = RowWriter::new(out)?;
    let opts = RunOptions { threads: thread_count(), timings: a.timings, progress: !a.quiet };
    let outcome = run_sweep(&cfg, &opts, &mut |rows| writer.write(rows))?;
    writer.flush()?;
    if !a.quiet {
        eprintln!("{} rows", outcome.rows);
        for (point, e) in &outcome.failures {
            eprintln!("failed: {point}: {e}");
        }
        for point in &outcome.flagged {
            eprintln!("not stationary: {point}");
        }
    }
    outcome.status()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Presets) => {
            for name in presets::names() {
                println!("{name:<10} {}", presets::description(name).unwrap_or(""));
            }
            Ok(())
        }
        Some(Command::ShowPreset { name }) => match presets::preset(name) {
            Some(c) => {
                print!("{}", c.to_text());
                Ok(())
            }
            None => Err(LabError::config("preset", format!("unknown preset `{name}`"))),
        },
        Some(Command::Run(a)) => run(a),
        None => run(&cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
