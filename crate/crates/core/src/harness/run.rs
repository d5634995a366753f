use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::metrics::{compute_metrics, Metrics, Participation};
use super::scenario::{plant_disturbances, Case, DisturbanceSpec, Scenario, Toggle};
use super::HarnessError;
use crate::control::{closed_loop_run, LqgController, LqgDesign, NoSfc, PiMode, PiSfcController, SfcController};
use crate::plant::{build_plant, ContinuousPlant, PlantParams, Preset, SimOptions};
use crate::signal::SignalRecord;
use crate::sysid::{identify_plant, EraReport, Identified};

#[derive(Debug, Clone, Serialize)]
pub struct CaseRun {
    pub case: Case,
    pub metrics: Metrics,
    /// FNV-1a digest of the disturbance samples; equal digests mean the
    /// cases saw the same disturbance.
    pub disturbance_digest: String,
    /// Time at which the closed loop left the blow-up bound; metrics then
    /// cover the samples up to that point.
    pub diverged_at: Option<f64>,
    #[serde(skip)]
    pub trace: SignalRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentificationSummary {
    pub retained_order: usize,
    pub order_at_99_9_percent: usize,
    pub cumulative_energy_at_r: f64,
    pub reflected_modes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub preset: Preset,
    pub toggle: Toggle,
    pub identification: Option<IdentificationSummary>,
    pub cases: Vec<CaseRun>,
}

/// Everything produced by one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub identified: Option<Identified>,
    pub lqg: Option<LqgDesign>,
    pub profile: SignalRecord,
}

impl ScenarioRun {
    pub fn case(&self, case: Case) -> Option<&CaseRun> {
        self.report.cases.iter().find(|c| c.case == case)
    }
}

fn digest(rec: &SignalRecord) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in rec.samples().iter().flatten() {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn sim_opts(s: &Scenario) -> SimOptions {
    SimOptions {
        dt: s.dt,
        ..SimOptions::default()
    }
}

/// Plant parameters of a scenario with its sweep toggle applied.
pub fn scenario_params(s: &Scenario) -> PlantParams {
    let mut p = s.plant_params();
    p.loops = s.toggle.apply(p.loops);
    p
}

/// Plant seen by `case`: the conventional inverter-only scheme also opens
/// the rectifier-side HVDC loops.
pub fn case_plant(s: &Scenario, case: Case) -> Result<ContinuousPlant, HarnessError> {
    let mut p = scenario_params(s);
    if case == Case::PiInverter {
        p.loops = p.loops.inverter_only();
    }
    build_plant(&p).map_err(|e| HarnessError::stage("plant", e))
}

/// Identification of the scenario plant from a fresh excitation record.
pub fn identify_scenario(s: &Scenario) -> Result<Identified, HarnessError> {
    let plant = case_plant(s, Case::DataDriven)?;
    let mut cfg = s.identification.clone();
    cfg.sample_time = s.sample_time;
    let (id, _, _) =
        identify_plant(&plant, &s.excitation, &cfg, sim_opts(s)).map_err(|e| HarnessError::stage("identification", e))?;
    Ok(id)
}

pub fn design_lqg(s: &Scenario, id: &Identified) -> Result<LqgController, HarnessError> {
    LqgController::design(&id.continuous, &s.controller.lqg, s.sample_time).map_err(|e| HarnessError::stage("design", e))
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun, HarnessError> {
    s.validate()?;
    let profile = s.disturbance_record()?;
    let w = plant_disturbances(&profile)?;
    let dig = digest(&w);
    let participation = Participation::from_params(&scenario_params(s));
    let mut identified = None;
    let mut lqg_design = None;
    let mut cases = Vec::with_capacity(s.cases.len());
    for &case in &s.cases {
        let plant = case_plant(s, case)?;
        let mut controller: Box<dyn SfcController> = match case {
            Case::DataDriven => {
                if identified.is_none() {
                    identified = Some(identify_scenario(s)?);
                }
                let ctrl = design_lqg(s, identified.as_ref().expect("identified above"))?;
                lqg_design = Some(ctrl.design.clone());
                Box::new(ctrl)
            }
            Case::PiBoth => Box::new(PiSfcController::new(s.controller.pi, PiMode::BothGrids, s.sample_time)),
            Case::PiInverter => Box::new(PiSfcController::new(s.controller.pi, PiMode::InverterOnly, s.sample_time)),
            Case::NoSfc => Box::new(NoSfc {
                sample_time: s.sample_time,
            }),
        };
        let run = closed_loop_run(&plant, controller.as_mut(), &w, sim_opts(s))
            .map_err(|e| HarnessError::stage("simulation", e))?;
        let diverged_at = run.diverged_at();
        if diverged_at.is_some() {
            log::warn!("{}: {} diverged at {diverged_at:?} s", s.name, case.label());
        }
        let metrics = compute_metrics(&run.trace, &participation)?;
        cases.push(CaseRun {
            case,
            metrics,
            disturbance_digest: dig.clone(),
            diverged_at,
            trace: run.trace,
        });
    }
    let identification = identified.as_ref().map(|id| summary(&id.report));
    Ok(ScenarioRun {
        report: ScenarioReport {
            name: s.name.clone(),
            preset: s.preset,
            toggle: s.toggle,
            identification,
            cases,
        },
        identified,
        lqg: lqg_design,
        profile,
    })
}

fn summary(r: &EraReport) -> IdentificationSummary {
    IdentificationSummary {
        retained_order: r.retained_order,
        order_at_99_9_percent: r.order_at_99_9_percent,
        cumulative_energy_at_r: r.cumulative_energy_at_r,
        reflected_modes: r.reflected_modes,
    }
}

/// Percent reduction `100 (base − value) / base`; zero when both vanish.
pub fn reduction(base: f64, value: f64) -> f64 {
    if base == 0.0 && value == 0.0 {
        0.0
    } else {
        100.0 * (base - value) / base
    }
}

/// Metric values per case with the reductions of the first case against
/// every other one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub cases: Vec<String>,
    pub metrics: Vec<String>,
    /// `values[m][c]`.
    pub values: Vec<Vec<f64>>,
    /// `reductions[m][b]` against `cases[b + 1]`.
    pub reductions: Vec<Vec<f64>>,
}

pub fn compare_cases(runs: &[CaseRun]) -> Result<Comparison, HarnessError> {
    if runs.len() < 2 {
        return Err(HarnessError::Compare(format!("need at least two cases, got {}", runs.len())));
    }
    if let Some(bad) = runs.iter().find(|r| r.disturbance_digest != runs[0].disturbance_digest) {
        return Err(HarnessError::Compare(format!(
            "{} ran on a different disturbance than {}",
            bad.case.label(),
            runs[0].case.label()
        )));
    }
    let rows: Vec<Vec<(&'static str, f64)>> = runs.iter().map(|r| r.metrics.rows()).collect();
    let metrics: Vec<String> = rows[0].iter().map(|(n, _)| n.to_string()).collect();
    let mut values = Vec::with_capacity(metrics.len());
    let mut reductions = Vec::with_capacity(metrics.len());
    for m in 0..metrics.len() {
        let vals: Vec<f64> = rows.iter().map(|r| r[m].1).collect();
        reductions.push(vals[1..].iter().map(|&b| reduction(b, vals[0])).collect());
        values.push(vals);
    }
    Ok(Comparison {
        cases: runs.iter().map(|r| r.case.label().to_string()).collect(),
        metrics,
        values,
        reductions,
    })
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.6e}")
    }
}

fn fmt_pct(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        "nan".into()
    }
}

impl Comparison {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["metric".to_string()];
        h.extend(self.cases.iter().cloned());
        h.extend(self.cases[1..].iter().map(|c| format!("reduction_vs_{c}_pct")));
        h
    }

    fn body(&self) -> Vec<Vec<String>> {
        self.metrics
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let mut row = vec![name.clone()];
                row.extend(self.values[m].iter().map(|&v| fmt_num(v)));
                row.extend(self.reductions[m].iter().map(|&v| fmt_pct(v)));
                row
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(self.header()).chain(self.body()) {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = std::iter::once(self.header()).chain(self.body()).collect();
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    if j == 0 {
                        format!("{cell:<w$}", w = widths[j])
                    } else {
                        format!("{cell:>w$}", w = widths[j])
                    }
                })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).expect("write to string");
            if i == 0 {
                writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)))
                    .expect("write to string");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(dir.join(name), contents).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

/// Table file stem for a scenario's disturbance kind.
pub fn table_stem(s: &Scenario) -> &'static str {
    match s.disturbance {
        DisturbanceSpec::Steps { .. } => "table3_analog",
        DisturbanceSpec::Continuous(_) => "table4_analog",
        DisturbanceSpec::File { .. } => "comparison",
    }
}

/// Hankel singular values with their cumulative energy, one row per order.
pub fn hsv_csv(r: &EraReport) -> String {
    let mut out = String::from("order,singular_value,cumulative_energy\n");
    for (i, (s, e)) in r.singular_values.iter().zip(&r.cumulative_energy).enumerate() {
        writeln!(out, "{},{s:e},{e:.15}", i + 1).expect("write to string");
    }
    out
}

/// Writes tables, traces and the JSON report of a run into `dir`.
pub fn write_run(s: &Scenario, run: &ScenarioRun, dir: &Path, format: OutputFormat) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let stem = table_stem(s);
    if run.report.cases.len() >= 2 {
        let cmp = compare_cases(&run.report.cases)?;
        match format {
            OutputFormat::Csv => write(dir, &format!("{stem}.csv"), &cmp.to_csv())?,
            OutputFormat::Json => write(dir, &format!("{stem}.json"), &json(&cmp))?,
        }
        write(dir, &format!("{stem}.txt"), &cmp.to_text())?;
    }
    for c in &run.report.cases {
        write(dir, &format!("trace_{}.csv", c.case.label()), &c.trace.to_csv_string())?;
    }
    write(dir, "profile.csv", &run.profile.to_csv_string())?;
    write(dir, "report.json", &json(&run.report))?;
    if let Some(id) = &run.identified {
        write(dir, "hsv.csv", &hsv_csv(&id.report))?;
        write(dir, "era_report.json", &json(&id.report))?;
        write(dir, "model.json", &json(&id.continuous))?;
    }
    if let Some(d) = &run.lqg {
        write(dir, "gains.json", &json(d))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepVariant {
    Toggle(Toggle),
    Preset(Preset),
}

impl SweepVariant {
    pub fn label(&self) -> String {
        match self {
            Self::Toggle(t) => t.label().to_string(),
            Self::Preset(Preset::Jh) => "preset jh".into(),
            Self::Preset(Preset::Cigre) => "preset cigre".into(),
        }
    }

    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        match *self {
            Self::Toggle(t) => s.toggle = t,
            Self::Preset(p) => {
                s.preset = p;
                s.params = None;
            }
        }
        s.name = format!("{} [{}]", base.name, self.label());
        s
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub variant: SweepVariant,
    pub run: ScenarioRun,
}

pub fn sweep(base: &Scenario, variants: &[SweepVariant]) -> Result<Vec<SweepRow>, HarnessError> {
    variants
        .iter()
        .map(|v| {
            Ok(SweepRow {
                variant: *v,
                run: run_scenario(&v.apply(base))?,
            })
        })
        .collect()
}

/// One line per variant and case with maxima and rms sums; a diverged
/// case carries the time it left the blow-up bound.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("variant,case,max_df_sum,df_rms_sum,dPg_rms_sum,max_dVdc,diverged_at_s\n");
    for row in rows {
        for c in &row.run.report.cases {
            let m = &c.metrics;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.variant.label(),
                c.case.label(),
                fmt_num(m.max_f_sum),
                fmt_num(m.f_rms_sum),
                fmt_num(m.pg_rms_sum),
                fmt_num(m.max_vdc),
                c.diverged_at.map_or(String::new(), |t| format!("{t:.1}"))
            )
            .expect("write to string");
        }
    }
    out
}
