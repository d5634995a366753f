use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hvdc_fr::harness::{
    compare_cases, design_lqg, hsv_csv, identify_scenario, run_scenario, sweep, sweep_csv, write_run, Case,
    DisturbanceSpec, HarnessError, OutputFormat, Scenario, SweepVariant, Toggle,
};
use hvdc_fr::plant::Preset;

#[derive(Parser)]
#[command(name = "hvdc-fr", version, about = "Data-driven frequency regulation for HVDC-linked grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON; the built-in step protocol when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides the excitation seed and the continuous profile seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ToggleArg {
    /// Baseline, "a: no PFC" and "b: neither IRE nor PFC".
    NoPfc,
    /// Baseline and "b: neither IRE nor PFC" only.
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop traces for the scenario cases, or the open loop.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run without secondary control regardless of the scenario cases.
        #[arg(long)]
        open_loop: bool,
    },
    /// Identify a reduced model; writes the ERA report, model and HSV table.
    Identify {
        #[command(flatten)]
        common: Common,
    },
    /// Identify and design the LQG regulator; writes the gains.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Run the scenario and write per-case metrics.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// End-to-end run: metrics, comparison table, traces and models.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Case comparison across loop toggles and plant presets.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        toggle: Option<ToggleArg>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum PresetArg {
    Jh,
    Cigre,
}

fn load(common: &Common, fallback: Scenario) -> Result<Scenario, HarnessError> {
    let mut s = match &common.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Scenario(format!("{}: {e}", path.display())))?;
            Scenario::from_json(&text).map_err(|e| match e {
                HarnessError::Scenario(m) => HarnessError::Scenario(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        None => fallback,
    };
    if let Some(seed) = common.seed {
        s.excitation.seed = seed;
        if let DisturbanceSpec::Continuous(p) = &mut s.disturbance {
            p.seed = seed;
        }
    }
    Ok(s)
}

fn out_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn simulate(common: &Common, open_loop: bool) -> Result<(), HarnessError> {
    let mut s = load(common, Scenario::step_protocol())?;
    if open_loop {
        s.cases = vec![Case::NoSfc];
    }
    let run = run_scenario(&s)?;
    out_dir(&common.out)?;
    write(&common.out, "profile.csv", &run.profile.to_csv_string())?;
    for c in &run.report.cases {
        write(&common.out, &format!("trace_{}.csv", c.case.label()), &c.trace.to_csv_string())?;
        if let Some(t) = c.diverged_at {
            eprintln!("warning: {} diverged at {t:.1} s; trace is truncated", c.case.label());
        }
    }
    Ok(())
}

fn identify(common: &Common) -> Result<(), HarnessError> {
    let s = load(common, Scenario::step_protocol())?;
    let id = identify_scenario(&s)?;
    out_dir(&common.out)?;
    write(&common.out, "era_report.json", &to_json(&id.report))?;
    write(&common.out, "model.json", &to_json(&id.continuous))?;
    write(&common.out, "hsv.csv", &hsv_csv(&id.report))?;
    println!(
        "retained order {} (cumulative energy {:.12}); 99.9% reached at order {}",
        id.report.retained_order, id.report.cumulative_energy_at_r, id.report.order_at_99_9_percent
    );
    Ok(())
}

fn design(common: &Common) -> Result<(), HarnessError> {
    let s = load(common, Scenario::step_protocol())?;
    let id = identify_scenario(&s)?;
    let ctrl = design_lqg(&s, &id)?;
    out_dir(&common.out)?;
    write(&common.out, "model.json", &to_json(&id.continuous))?;
    write(&common.out, "gains.json", &to_json(&ctrl.design))?;
    println!(
        "regulator abscissa {:.4e}, estimator abscissa {:.4e}",
        ctrl.design.regulator_abscissa, ctrl.design.estimator_abscissa
    );
    Ok(())
}

fn evaluate(common: &Common) -> Result<(), HarnessError> {
    let s = load(common, Scenario::step_protocol())?;
    let run = run_scenario(&s)?;
    out_dir(&common.out)?;
    match common.format {
        Format::Json => write(&common.out, "metrics.json", &to_json(&run.report))?,
        Format::Csv => {
            let mut out = String::from("case,metric,value\n");
            for c in &run.report.cases {
                for (name, v) in c.metrics.rows() {
                    out.push_str(&format!("{},{name},{v:e}\n", c.case.label()));
                }
            }
            write(&common.out, "metrics.csv", &out)?;
        }
    }
    if run.report.cases.len() >= 2 {
        print!("{}", compare_cases(&run.report.cases)?.to_text());
    }
    Ok(())
}

fn pipeline(common: &Common) -> Result<(), HarnessError> {
    let s = load(common, Scenario::step_protocol())?;
    let run = run_scenario(&s)?;
    write_run(&s, &run, &common.out, common.format.into())?;
    if run.report.cases.len() >= 2 {
        print!("{}", compare_cases(&run.report.cases)?.to_text());
    }
    println!("wrote {}", common.out.display());
    Ok(())
}

fn run_sweep(common: &Common, toggle: Option<ToggleArg>, preset: Option<PresetArg>) -> Result<(), HarnessError> {
    let s = load(common, Scenario::continuous_protocol())?;
    let mut variants = vec![SweepVariant::Toggle(Toggle::Base)];
    match toggle {
        Some(ToggleArg::NoPfc) => variants.extend([SweepVariant::Toggle(Toggle::NoPfc), SweepVariant::Toggle(Toggle::None)]),
        Some(ToggleArg::None) => variants.push(SweepVariant::Toggle(Toggle::None)),
        None => {}
    }
    match preset {
        Some(PresetArg::Cigre) => variants.push(SweepVariant::Preset(Preset::Cigre)),
        Some(PresetArg::Jh) => variants.push(SweepVariant::Preset(Preset::Jh)),
        None if toggle.is_none() => variants.extend([
            SweepVariant::Toggle(Toggle::NoPfc),
            SweepVariant::Toggle(Toggle::None),
            SweepVariant::Preset(Preset::Cigre),
        ]),
        None => {}
    }
    let rows = sweep(&s, &variants)?;
    out_dir(&common.out)?;
    let csv = sweep_csv(&rows);
    match common.format {
        Format::Csv => write(&common.out, "sweep.csv", &csv)?,
        Format::Json => {
            let reports: Vec<_> = rows
                .iter()
                .map(|r| serde_json::json!({ "variant": r.variant.label(), "report": &r.run.report }))
                .collect();
            write(&common.out, "sweep.json", &to_json(&reports))?;
        }
    }
    print!("{csv}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, open_loop } => simulate(common, *open_loop),
        Command::Identify { common } => identify(common),
        Command::Design { common } => design(common),
        Command::Evaluate { common } => evaluate(common),
        Command::Pipeline { common } => pipeline(common),
        Command::Sweep { common, toggle, preset } => run_sweep(common, *toggle, *preset),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
