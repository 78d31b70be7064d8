//! Command-line front end: `reconstruct`, `verify`, `simulate`, `table1` and
//! `sweep`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input,
//! 3 numerical failure. Flags override values from `--config <json>`, which
//! override the built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::eigensolver::{solve_lowest, Spectrum};
use crate::error::{Error, Result};
use crate::grid::{fmt17, parse_two_column_csv, Grid, SampledFunction};
use crate::manifest::{OutputDir, RunManifest};
use crate::pipeline::{reconstruct, ERefRule, ReconstructOptions, Reconstruction};
use crate::plot::{line_plot, Series};
use crate::potentials::{catalog_reference, Potential};
use crate::reconstruct::{sweep_family, OutOfRangePolicy};
use crate::simulate::{evolve, Boundary, Perturbation, PerturbationShape, SimConfig, SimResult};
use crate::spectral::{power_spectrum, MIN_SERIES_LEN};
use crate::verify::{verify, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "blankgordon",
    version,
    about = "Reconstruct u_xx - u_tt = F(u) from a kink's stability operator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Kink and nonlinearity from a potential's designated mode.
    Reconstruct(ReconArgs),
    /// Identity checks and catalog comparison.
    Verify(VerifyArgs),
    /// Time evolution of the kink with an optional perturbation.
    Simulate(SimulateArgs),
    /// Reproduce the six-row catalog.
    Table1(Table1Args),
    /// Reconstructions over a family of (A, B) pairs.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PoschlTeller,
    Delta,
    Harmonic,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconArgs {
    /// Catalog row 1..=6.
    #[arg(long)]
    pub row: Option<usize>,
    #[arg(long, value_enum)]
    pub potential: Option<Family>,
    /// Pöschl–Teller depth parameter.
    #[arg(long)]
    pub n: Option<u32>,
    /// Delta-well strength.
    #[arg(long, allow_hyphen_values = true)]
    pub strength: Option<f64>,
    /// Harmonic coefficient of x².
    #[arg(long, allow_hyphen_values = true)]
    pub coefficient: Option<f64>,
    /// Tabulated potential, two columns `x,V`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Mode samples `x,mode` replacing the solver's mode.
    #[arg(long)]
    pub mode_csv: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long = "A", allow_hyphen_values = true)]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    #[serde(rename = "B")]
    pub b: Option<f64>,
    /// Designated mode index.
    #[arg(long)]
    pub mode: Option<usize>,
    /// Energy shift: `mode` (designated energy) or a number.
    #[arg(long, allow_hyphen_values = true)]
    pub eref: Option<String>,
    /// error | clamp-ends | linear-extend | periodic-extend
    #[arg(long)]
    pub policy: Option<String>,
    /// Use the raw discrete mode instead of the extrapolated one.
    #[arg(long)]
    pub no_refine: bool,
    /// JSON file of defaults for these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub recon: ReconArgs,
    /// Exit 1 when any check fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub recon: ReconArgs,
    /// none | mode:K | gauss:CENTER,WIDTH
    #[arg(long, allow_hyphen_values = true)]
    pub perturb: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Initial velocity shape, same syntax as `--perturb`.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub velocity_amplitude: Option<f64>,
    #[arg(long)]
    pub tfinal: Option<f64>,
    /// dt / h
    #[arg(long)]
    pub courant: Option<f64>,
    /// clamp | reflecting
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub probes: Option<Vec<f64>>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Table1Args {
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<usize>>,
    /// Points per grid, keeping each row's default extent.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub recon: ReconArgs,
    #[arg(long = "A-values", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "A_values")]
    pub a_values: Option<Vec<f64>>,
    #[arg(long = "B-values", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "B_values")]
    pub b_values: Option<Vec<f64>>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Overlays the flags that were given onto the config file's values.
/// Unknown keys in the file are rejected.
fn merged<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let to_value = |t: &T| serde_json::to_value(t).map_err(|e| Error::Parse(e.to_string()));
    let Some(path) = config else {
        return serde_json::from_value(to_value(flags)?).map_err(|e| Error::Parse(e.to_string()));
    };
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut base: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let Some(base_map) = base.as_object_mut() else {
        return Err(Error::Parse(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    let known = to_value(flags)?;
    let known = known
        .as_object()
        .expect("argument structs serialize to objects");
    if let Some(k) = base_map.keys().find(|k| !known.contains_key(*k)) {
        return Err(Error::InvalidConfig(format!("unknown config key '{k}'")));
    }
    for (k, v) in known {
        if !v.is_null() && *v != Value::Bool(false) {
            base_map.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(base).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Everything a reconstruction needs, resolved from flags and config.
struct Setup {
    potential: Potential,
    opts: ReconstructOptions,
    inputs: Vec<PathBuf>,
    resolved: Value,
    label: String,
}

fn grid_from_nodes(xs: &[f64]) -> Result<Grid> {
    let g = Grid::new(xs[0], xs[xs.len() - 1], xs.len())?;
    let h = g.spacing();
    if let Some(i) = (0..xs.len()).find(|&i| (xs[i] - g.x(i)).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::InvalidGrid(format!(
            "mode samples are not uniformly spaced (row {})",
            i + 1
        )));
    }
    Ok(g)
}

fn setup(a: &ReconArgs) -> Result<Setup> {
    let chosen = [a.row.is_some(), a.potential.is_some(), a.csv.is_some()]
        .iter()
        .filter(|&&c| c)
        .count();
    if chosen != 1 {
        return Err(Error::InvalidConfig(
            "specify exactly one of --row, --potential or --csv".into(),
        ));
    }
    let mut inputs = Vec::new();
    let potential = if let Some(row) = a.row {
        catalog_reference(row)?
    } else if let Some(family) = a.potential {
        let missing = |flag: &str| Error::InvalidConfig(format!("--potential needs --{flag}"));
        match family {
            Family::PoschlTeller => Potential::poschl_teller(a.n.ok_or_else(|| missing("n"))?)?,
            Family::Delta => Potential::delta_well(a.strength.ok_or_else(|| missing("strength"))?)?,
            Family::Harmonic => {
                Potential::harmonic(a.coefficient.ok_or_else(|| missing("coefficient"))?)?
            }
        }
    } else {
        let path = a.csv.as_ref().expect("one source chosen");
        inputs.push(path.clone());
        Potential::tabulated_from_csv(&read_file(path)?)?
    };

    let user_mode = match &a.mode_csv {
        Some(path) => {
            inputs.push(path.clone());
            let (xs, ys) = parse_two_column_csv(&read_file(path)?)?;
            if xs.len() < 3 {
                return Err(Error::InvalidSamples(
                    "mode CSV needs at least 3 rows".into(),
                ));
            }
            Some(SampledFunction::new(grid_from_nodes(&xs)?, ys)?)
        }
        None => None,
    };
    let base = user_mode
        .as_ref()
        .map(|m| *m.grid())
        .unwrap_or_else(|| potential.default_grid());
    let grid = Grid::new(
        a.x_min.unwrap_or(base.x_min()),
        a.x_max.unwrap_or(base.x_max()),
        a.points.unwrap_or(base.len()),
    )?;
    let e_ref =
        match a.eref.as_deref() {
            None | Some("mode") => ERefRule::ModeEnergy,
            Some(s) => ERefRule::Fixed(s.parse().map_err(|_| {
                Error::Parse(format!("--eref expects 'mode' or a number, got '{s}'"))
            })?),
        };
    let policy: OutOfRangePolicy = a.policy.as_deref().unwrap_or("error").parse()?;
    let opts = ReconstructOptions {
        grid: Some(grid),
        a: a.a,
        b: a.b,
        mode_index: a.mode.unwrap_or(0),
        e_ref,
        refine: !a.no_refine,
        policy,
        user_mode,
    };
    let (ra, rb) = crate::pipeline::default_ab(&potential, &opts);
    let mut label = potential.id();
    if opts.mode_index > 0 {
        label.push_str(&format!("-mode{}", opts.mode_index));
    }
    let resolved = json!({
        "potential": label,
        "mode_csv": a.mode_csv,
        "x_min": fmt17(grid.x_min()),
        "x_max": fmt17(grid.x_max()),
        "points": grid.len(),
        "A": fmt17(ra),
        "B": fmt17(rb),
        "mode": opts.mode_index,
        "eref": match e_ref {
            ERefRule::ModeEnergy => "mode".to_string(),
            ERefRule::Fixed(e) => fmt17(e),
        },
        "policy": policy.name(),
        "refine": opts.refine,
    });
    Ok(Setup {
        potential,
        opts,
        inputs,
        resolved,
        label,
    })
}

fn output_dir(command: &str, s: &Setup, config: Value) -> Result<OutputDir> {
    let mut m = RunManifest::new(command, config);
    for p in &s.inputs {
        m.hash_input(p)?;
    }
    Ok(OutputDir::from_env(&format!("{command}/{}", s.label), m))
}

fn write_reconstruction(out: &mut OutputDir, rec: &Reconstruction) -> Result<()> {
    out.write("kink.csv", &rec.kink().to_csv())?;
    out.write("nonlinearity.csv", &rec.nonlinearity.to_csv()?)?;
    let mut paths = Vec::new();
    for (k, m) in rec.spectrum.modes.iter().enumerate() {
        paths.push(
            out.write(&format!("mode_{k}.csv"), &m.mode.to_csv())?
                .display()
                .to_string(),
        );
    }
    let spectrum = rec.spectrum.to_json(&paths);
    out.write("spectrum.json", &pretty(&spectrum))?;
    out.write(
        "reconstruction.json",
        &pretty(&rec.nonlinearity.summary_json()),
    )?;
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn print_reconstruction(rec: &Reconstruction) {
    let (lo, hi) = rec.nonlinearity.domain();
    println!(
        "potential {}: E_0 = {:.10}, designated mode {} (E_ref = {:.10})",
        rec.potential.id(),
        rec.spectrum.ground_energy,
        rec.designated,
        rec.e_ref
    );
    println!(
        "kink: A = {}, B = {}, u in [{lo:.10}, {hi:.10}]",
        rec.kink().a,
        rec.kink().b
    );
    if rec.spectrum.dynamically_unstable {
        println!(
            "warning: modes {:?} have imaginary frequency; the kink is dynamically unstable",
            rec.spectrum.imaginary_modes()
        );
    }
}

fn cmd_reconstruct(args: ReconArgs) -> Result<i32> {
    let a = merged(&args, args.config.as_deref())?;
    let s = setup(&a)?;
    let rec = reconstruct(&s.potential, &s.opts)?;
    let mut out = output_dir("reconstruct", &s, s.resolved.clone())?;
    write_reconstruction(&mut out, &rec)?;
    print_reconstruction(&rec);
    let root = out.root().display().to_string();
    out.finish(None)?;
    println!("wrote {root}");
    Ok(EXIT_OK)
}

fn print_report(r: &VerificationReport) {
    for (name, e) in &r.identities {
        println!(
            "{name:<18} max error {:.3e}  tolerance {:.1e}  {}",
            e.max_abs_error,
            e.tolerance,
            if e.pass { "PASS" } else { "FAIL" }
        );
    }
    for n in &r.notes {
        println!("note: {n}");
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let a = merged(&args, args.recon.config.as_deref())?;
    let s = setup(&a.recon)?;
    let rec = reconstruct(&s.potential, &s.opts)?;
    let report = verify(&rec)?;
    let mut config = s.resolved.clone();
    config["strict"] = json!(a.strict);
    let mut out = output_dir("verify", &s, config)?;
    out.write("report.json", &(report.to_json() + "\n"))?;
    print_report(&report);
    println!("verification {}", if report.pass { "PASS" } else { "FAIL" });
    out.finish(Some(report.pass))?;
    Ok(if a.strict && !report.pass {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    })
}

fn parse_shape(spec: &str) -> Result<Option<PerturbationShape>> {
    let bad = || {
        Error::Parse(format!(
            "expected none, mode:K or gauss:CENTER,WIDTH, got '{spec}'"
        ))
    };
    if spec == "none" {
        return Ok(None);
    }
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "mode" => Ok(Some(PerturbationShape::DesignatedMode(
            rest.parse().map_err(|_| bad())?,
        ))),
        "gauss" => {
            let (c, w) = rest.split_once(',').ok_or_else(bad)?;
            Ok(Some(PerturbationShape::Gaussian {
                center: c.trim().parse().map_err(|_| bad())?,
                width: w.trim().parse().map_err(|_| bad())?,
            }))
        }
        _ => Err(bad()),
    }
}

fn perturbation(spec: Option<&str>, amplitude: f64) -> Result<Option<Perturbation>> {
    Ok(parse_shape(spec.unwrap_or("none"))?.map(|shape| Perturbation { amplitude, shape }))
}

fn mode_index(p: &Option<Perturbation>) -> Option<usize> {
    match p.as_ref()?.shape {
        PerturbationShape::DesignatedMode(k) => Some(k),
        _ => None,
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let a = merged(&args, args.recon.config.as_deref())?;
    let s = setup(&a.recon)?;
    let rec = reconstruct(&s.potential, &s.opts)?;
    let amplitude = a.amplitude.unwrap_or(1e-3);
    let tfinal = a.tfinal.unwrap_or(20.0);
    let courant = a.courant.unwrap_or(0.5);
    let boundary = match a.boundary.as_deref().unwrap_or("clamp") {
        "clamp" | "clamp-to-kink" => Boundary::ClampToKink,
        "reflecting" => Boundary::Reflecting,
        other => return Err(Error::Parse(format!("unknown boundary '{other}'"))),
    };
    let mut cfg = SimConfig::with_courant(rec.grid, courant, tfinal);
    cfg.boundary = boundary;
    cfg.perturbation = perturbation(a.perturb.as_deref(), amplitude)?;
    cfg.initial_velocity =
        perturbation(a.velocity.as_deref(), a.velocity_amplitude.unwrap_or(1e-3))?;
    cfg.probe_positions = a.probes.clone().unwrap_or_default();
    cfg.validate()?;

    let needed = [
        mode_index(&cfg.perturbation),
        mode_index(&cfg.initial_velocity),
    ]
    .into_iter()
    .flatten()
    .map(|k| k + 1)
    .max()
    .unwrap_or(0);
    let spectrum: Spectrum = if needed > rec.spectrum.modes.len() {
        let mut sp = solve_lowest(&rec.potential, &rec.grid, needed)?;
        sp.designate(rec.designated)?;
        sp
    } else {
        rec.spectrum.clone()
    };
    let result = evolve(&rec.nonlinearity, &cfg, Some(&spectrum))?;
    let expected = mode_index(&cfg.perturbation).map(|k| spectrum.omega_squared[k]);

    let mut config = s.resolved.clone();
    config["perturb"] = json!(a.perturb.as_deref().unwrap_or("none"));
    config["amplitude"] = json!(fmt17(amplitude));
    config["velocity"] = json!(a.velocity.as_deref().unwrap_or("none"));
    config["velocity_amplitude"] = json!(fmt17(a.velocity_amplitude.unwrap_or(1e-3)));
    config["tfinal"] = json!(fmt17(tfinal));
    config["courant"] = json!(fmt17(courant));
    config["boundary"] = json!(boundary);
    config["probes"] = json!(result
        .probes
        .iter()
        .map(|p| fmt17(p.position))
        .collect::<Vec<_>>());
    let mut out = output_dir("simulate", &s, config)?;
    let perturbed = cfg
        .perturbation
        .iter()
        .chain(&cfg.initial_velocity)
        .any(|p| p.amplitude != 0.0);
    write_simulation(&mut out, &rec, &result, expected, perturbed, a.svg)?;

    println!("steps {} dt {}", result.energy_series.len() - 1, result.dt);
    println!("drift max|u - kink| = {:.3e}", result.drift);
    println!("energy drift (relative) = {:.3e}", result.energy_drift);
    if let Some(w2) = expected {
        println!(
            "expected omega = {:.6} (omega^2 = {w2:.6})",
            w2.max(0.0).sqrt()
        );
    }
    for p in &result.measured_frequencies {
        println!(
            "measured omega = {:.6} (power {:.3e})",
            p.omega, p.peak_power
        );
    }
    out.finish(None)?;
    Ok(EXIT_OK)
}

fn write_simulation(
    out: &mut OutputDir,
    rec: &Reconstruction,
    r: &SimResult,
    expected_omega_squared: Option<f64>,
    perturbed: bool,
    svg: bool,
) -> Result<()> {
    let g = rec.grid;
    let kink = rec.kink().samples.values();
    let u = r.final_field.values();
    let mut field = String::from("x,u,kink\n");
    for i in 0..g.len() {
        field.push_str(&format!(
            "{},{},{}\n",
            fmt17(g.x(i)),
            fmt17(u[i]),
            fmt17(kink[i])
        ));
    }
    out.write("final_field.csv", &field)?;
    out.write("probes.csv", &r.probes_csv())?;
    out.write("energy.csv", &r.energy_csv())?;
    let spectrum = match r.probes.first() {
        Some(p) if perturbed && p.values.len() >= MIN_SERIES_LEN => {
            Some(power_spectrum(&p.values, r.dt)?)
        }
        _ => None,
    };
    if let Some((omega, power)) = &spectrum {
        let mut s = String::from("omega,power\n");
        for (w, p) in omega.iter().zip(power) {
            s.push_str(&format!("{},{}\n", fmt17(*w), fmt17(*p)));
        }
        out.write("probe_power.csv", &s)?;
    }
    let summary = json!({
        "dt": fmt17(r.dt),
        "steps": r.energy_series.len() - 1,
        "drift": fmt17(r.drift),
        "energy_drift": fmt17(r.energy_drift),
        "expected_omega": expected_omega_squared.map(|w2| fmt17(w2.max(0.0).sqrt())),
        "measured_frequencies": r.measured_frequencies.iter().map(|p| json!({
            "omega": fmt17(p.omega),
            "peak_power": fmt17(p.peak_power),
        })).collect::<Vec<_>>(),
        "probes": r.probes.iter().map(|p| fmt17(p.position)).collect::<Vec<_>>(),
    });
    out.write("simulation.json", &pretty(&summary))?;
    if svg {
        let xs = g.nodes();
        let plot = line_plot(
            "final field and kink",
            "x",
            "u",
            &[
                Series {
                    label: "u(x, t_final)",
                    x: &xs,
                    y: u,
                },
                Series {
                    label: "kink",
                    x: &xs,
                    y: kink,
                },
            ],
        );
        out.write("final_field.svg", &plot)?;
        if let Some((omega, power)) = &spectrum {
            let keep = omega.iter().take_while(|&&w| w <= 10.0).count();
            let log: Vec<f64> = power[..keep]
                .iter()
                .map(|p| p.max(1e-300).log10())
                .collect();
            let plot = line_plot(
                "probe power spectrum",
                "omega",
                "log10 power",
                &[Series {
                    label: "probe 1",
                    x: &omega[..keep],
                    y: &log,
                }],
            );
            out.write("probe_power.svg", &plot)?;
        }
    }
    Ok(())
}

/// Tolerance on the computed ground energy against the catalog value.
pub fn ground_energy_tolerance(row: usize) -> f64 {
    match row {
        5 => 2e-3,
        6 => 1e-3,
        _ => 1e-4,
    }
}

#[derive(Debug, Serialize)]
struct TableRow {
    row: usize,
    pass: bool,
    ground_energy: Option<f64>,
    table_ground_energy: f64,
    ground_energy_error: Option<f64>,
    report: Option<VerificationReport>,
    error: Option<String>,
}

fn table_row(row: usize, points: Option<usize>) -> Result<TableRow> {
    let p = catalog_reference(row)?;
    let table_e0 = p
        .reference
        .as_ref()
        .expect("catalog rows carry references")
        .ground_energy;
    let base = p.default_grid();
    let grid = Grid::new(base.x_min(), base.x_max(), points.unwrap_or(base.len()))?;
    let opts = ReconstructOptions {
        grid: Some(grid),
        ..Default::default()
    };
    let outcome =
        reconstruct(&p, &opts).and_then(|rec| Ok((verify(&rec)?, rec.spectrum.ground_energy)));
    Ok(match outcome {
        Ok((report, e0)) => {
            let err = (e0 - table_e0).abs();
            TableRow {
                row,
                pass: report.pass && err <= ground_energy_tolerance(row),
                ground_energy: Some(e0),
                table_ground_energy: table_e0,
                ground_energy_error: Some(err),
                report: Some(report),
                error: None,
            }
        }
        Err(e) => TableRow {
            row,
            pass: false,
            ground_energy: None,
            table_ground_energy: table_e0,
            ground_energy_error: None,
            report: None,
            error: Some(e.to_string()),
        },
    })
}

fn print_table_row(t: &TableRow) {
    let verdict = if t.pass { "PASS" } else { "FAIL" };
    let Some(r) = &t.report else {
        println!(
            "row {}  E0 table {}  FAIL  {}",
            t.row,
            t.table_ground_energy,
            t.error.as_deref().unwrap_or("")
        );
        return;
    };
    let e0 = t.ground_energy.expect("set with report");
    let kink = r
        .identities
        .get("table_kink")
        .map_or("n/a".to_string(), |e| format!("{:.2e}", e.max_abs_error));
    let f = r
        .identities
        .get("table_F")
        .map_or("identity-only".to_string(), |e| {
            format!("{:.2e}", e.max_abs_error)
        });
    println!(
        "row {}  E0 {e0:.7} (table {})  kink err {kink}  F err {f}  {verdict}",
        t.row, t.table_ground_energy
    );
    let e0_tol = ground_energy_tolerance(t.row);
    if t.ground_energy_error.expect("set with report") > e0_tol {
        println!(
            "    E0 error {:.3e} > tolerance {e0_tol:.1e} (h^2 = {:.3e})",
            t.ground_energy_error.unwrap(),
            r.h_squared
        );
    }
    for (name, e) in r.identities.iter().filter(|(_, e)| !e.pass) {
        println!(
            "    {name}: {:.3e} > tolerance {:.1e} (h^2 = {:.3e}{})",
            e.max_abs_error,
            e.tolerance,
            r.h_squared,
            if r.h_squared > e.tolerance {
                ", grid too coarse for this tolerance"
            } else {
                ""
            }
        );
    }
}

fn cmd_table1(args: Table1Args) -> Result<i32> {
    let a = merged(&args, args.config.as_deref())?;
    let rows = a.rows.clone().unwrap_or_else(|| (1..=6).collect());
    if rows.is_empty() {
        return Err(Error::InvalidConfig("--rows is empty".into()));
    }
    for &r in &rows {
        catalog_reference(r)?;
    }
    let results = rows
        .par_iter()
        .map(|&r| table_row(r, a.grid_points))
        .collect::<Result<Vec<_>>>()?;
    for t in &results {
        print_table_row(t);
    }
    let pass = results.iter().all(|t| t.pass);
    let config = json!({ "rows": rows, "grid_points": a.grid_points });
    let mut out = OutputDir::from_env("table1", RunManifest::new("table1", config));
    let combined = serde_json::to_string_pretty(&results).map_err(|e| Error::Io(e.to_string()))?;
    out.write("table1.json", &(combined + "\n"))?;
    out.finish(Some(pass))?;
    println!(
        "{} of {} rows pass",
        results.iter().filter(|t| t.pass).count(),
        results.len()
    );
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let a = merged(&args, args.recon.config.as_deref())?;
    let s = setup(&a.recon)?;
    let (a0, b0) = crate::pipeline::default_ab(&s.potential, &s.opts);
    let a_values = a.a_values.clone().unwrap_or_else(|| vec![a0]);
    let b_values = a.b_values.clone().unwrap_or_else(|| vec![b0]);
    if a_values.is_empty() || b_values.is_empty() {
        return Err(Error::InvalidConfig("sweep lists must not be empty".into()));
    }
    let rec = reconstruct(&s.potential, &s.opts)?;
    let nl = &rec.nonlinearity;
    let family = sweep_family(
        &rec.kink().mode,
        &nl.shifted_v,
        nl.e_ref,
        &a_values,
        &b_values,
    );

    let mut config = s.resolved.clone();
    config["A_values"] = json!(a_values.iter().map(|v| fmt17(*v)).collect::<Vec<_>>());
    config["B_values"] = json!(b_values.iter().map(|v| fmt17(*v)).collect::<Vec<_>>());
    let mut out = output_dir("sweep", &s, config)?;
    let mut table = String::from("A,B,status,u_min,u_max,covariance_residual\n");
    let mut lattice = String::from("A,B,k,u,F\n");
    let mut first_error: Option<Error> = None;
    for el in &family {
        let tag = format!("A{}_B{}", el.a, el.b);
        match &el.outcome {
            Ok((member, summary)) => {
                // covariance: shifting B by d moves u by A·d and leaves F's shape unchanged
                let reference = family
                    .iter()
                    .find(|o| o.a == el.a && o.outcome.is_ok())
                    .and_then(|o| o.outcome.as_ref().ok().map(|(_, s)| (o.b, s)))
                    .expect("el itself qualifies");
                let shift = el.a * (el.b - reference.0);
                let residual = summary
                    .u
                    .iter()
                    .zip(&summary.f)
                    .zip(reference.1.u.iter().zip(&reference.1.f))
                    .map(|((u, f), (ur, fr))| (u - ur - shift).abs().max((f - fr).abs()))
                    .fold(0.0_f64, f64::max);
                table.push_str(&format!(
                    "{},{},ok,{},{},{}\n",
                    fmt17(el.a),
                    fmt17(el.b),
                    fmt17(summary.u_range.0),
                    fmt17(summary.u_range.1),
                    fmt17(residual)
                ));
                for (k, (u, f)) in summary.u.iter().zip(&summary.f).enumerate() {
                    lattice.push_str(&format!(
                        "{},{},{k},{},{}\n",
                        fmt17(el.a),
                        fmt17(el.b),
                        fmt17(*u),
                        fmt17(*f)
                    ));
                }
                let member_config =
                    json!({ "A": fmt17(el.a), "B": fmt17(el.b), "parent": s.resolved });
                let mut sub = OutputDir::new(
                    out.root().join(&tag),
                    RunManifest::new("sweep-member", member_config),
                );
                sub.write("kink.csv", &member.kink.to_csv())?;
                sub.write("nonlinearity.csv", &member.to_csv()?)?;
                sub.write("reconstruction.json", &pretty(&member.summary_json()))?;
                out.manifest
                    .outputs
                    .push(sub.finish(None)?.display().to_string());
                println!(
                    "{tag}: u in [{:.6}, {:.6}], covariance residual {residual:.3e}",
                    summary.u_range.0, summary.u_range.1
                );
            }
            Err(e) => {
                table.push_str(&format!("{},{},failed,,,\n", fmt17(el.a), fmt17(el.b)));
                println!("{tag}: {e}");
                first_error.get_or_insert(e.clone());
            }
        }
    }
    out.write("sweep.csv", &table)?;
    out.write("comparison.csv", &lattice)?;
    out.finish(Some(first_error.is_none()))?;
    Ok(first_error.map_or(EXIT_OK, |e| exit_code(&e)))
}
