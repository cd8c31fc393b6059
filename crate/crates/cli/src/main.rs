//! `biharm`: batch driver for certification, mu-curves and the three solve
//! pipelines. All outputs go to `--out`; failures exit nonzero and leave
//! an `error.json` next to whatever was already written.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biharm::certifier::HypothesisReport;
use biharm::config::RunConfig;
use biharm::continuation::{continue_to_critical, FrozenConstants};
use biharm::io::{field_csv, format_real, write_mu_csv, CsvTable, SpectralDump};
use biharm::problem::ProblemData;
use biharm::torus::SpectralField;
use biharm::workflow::{self, SubReport};
use clap::{Parser, Subcommand};

const EXIT_CONDITIONS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_HYPOTHESIS: u8 = 4;
const EXIT_SHAPE: u8 = 5;
const EXIT_COLLAPSE: u8 = 6;
const EXIT_DIVERGING: u8 = 7;
const EXIT_IO: u8 = 8;

#[derive(Parser, Debug)]
#[command(name = "biharm", version, about = "Spectral solver for fourth-order semilinear equations on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Exponent, overrides the config.
    #[arg(long, global = true)]
    q: Option<f64>,

    #[arg(long, global = true)]
    k_min: Option<f64>,

    #[arg(long, global = true)]
    k_max: Option<f64>,

    #[arg(long, global = true)]
    k_steps: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; defaults to the config's `out`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run solvers even when the certificate fails.
    #[arg(long, global = true)]
    force: bool,

    /// Also write a gnuplot script for the mu-curve.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Command {
    /// Check the existence hypotheses and write report.json.
    Certify,
    /// Trace k -> mu_{k,q} and annotate its shape.
    MuCurve,
    /// Both subcritical solutions: the ball minimizer and the mountain pass.
    SolveSub,
    /// Mountain-pass critical point only.
    MountainPass,
    /// Continue the negative-energy solution to the critical exponent.
    SolveCritical,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::MuCurve => "mu-curve",
            Command::SolveSub => "solve-sub",
            Command::MountainPass => "mountain-pass",
            Command::SolveCritical => "solve-critical",
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn new(code: u8, kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code,
            kind: kind.to_string(),
            message: message.into(),
        }
    }
}

fn code_for_kind(kind: &str) -> u8 {
    match kind {
        "InvalidGeometry" | "InvalidArgument" | "ParseError" | "ConfigError" => EXIT_CONFIG,
        "HypothesisViolated" | "BadSigma" | "NonPositiveEps0" => EXIT_HYPOTHESIS,
        "ShapeNotFound" => EXIT_SHAPE,
        "Collapse" => EXIT_COLLAPSE,
        "DivergingNorms" => EXIT_DIVERGING,
        "IoError" => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

impl From<biharm::Error> for Failure {
    fn from(e: biharm::Error) -> Self {
        Failure::new(code_for_kind(e.kind()), e.kind(), e.to_string())
    }
}

type Outcome = Result<(), Failure>;

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    force: bool,
    gnuplot: bool,
}

fn write_file(dir: &Path, name: &str, text: &str) -> Outcome {
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(dir.join(name), text))
        .map_err(|e| Failure::new(EXIT_IO, "IoError", format!("{}: {e}", dir.join(name).display())))
}

fn error_json(command: &str, f: &Failure) -> String {
    let v = serde_json::json!({
        "command": command,
        "exit_code": f.code,
        "kind": f.kind,
        "message": f.message,
    });
    serde_json::to_string_pretty(&v).expect("plain data")
}

fn load(cli: &Cli) -> Result<Run, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(EXIT_CONFIG, "ConfigError", "--config is required"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_CONFIG, "ConfigError", format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(q) = cli.q {
        cfg.q = Some(q);
    }
    if let Some(k) = cli.k_min {
        cfg.k_range.k_min = k;
    }
    if let Some(k) = cli.k_max {
        cfg.k_range.k_max = k;
    }
    if let Some(n) = cli.k_steps {
        cfg.k_range.k_steps = n;
    }
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    // re-check the overridden values
    cfg = RunConfig::parse(&cfg.to_json())?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Run {
        cfg,
        out,
        force: cli.force,
        gnuplot: cli.gnuplot,
    })
}

fn dump_field(run: &Run, stem: &str, u: &SpectralField, normalization: &str) -> Outcome {
    write_file(&run.out, &format!("{stem}.csv"), &field_csv(u))?;
    write_file(
        &run.out,
        &format!("{stem}.spectral.json"),
        &SpectralDump::from_field(u, normalization).to_json(),
    )
}

/// Certificate, written before anything else; solve commands stop here
/// unless it passes or `--force` is given.
fn gate(run: &Run, problem: &ProblemData, q: f64) -> Result<HypothesisReport, Failure> {
    let report = workflow::certify_stage(&run.cfg, problem, q)?;
    write_file(&run.out, "report.json", &report.to_json())?;
    if !report.required_hold() && !run.force {
        return Err(Failure::new(
            EXIT_CONDITIONS,
            "ConditionsFailed",
            format!(
                "hypotheses do not hold (cond1 {}, cond2 {}); rerun with --force to solve anyway",
                report.cond1_holds, report.cond2_holds
            ),
        ));
    }
    Ok(report)
}

fn gnuplot_script() -> &'static str {
    "set datafile separator ','\n\
     set logscale x\n\
     set xlabel 'k'\n\
     set ylabel 'mu'\n\
     set key off\n\
     plot 'mu.csv' using 1:2 every ::1 with linespoints\n\
     pause -1\n"
}

fn cmd_certify(run: &Run) -> Outcome {
    let problem = run.cfg.problem()?;
    let q = run.cfg.q.ok_or_else(|| Failure::new(EXIT_CONFIG, "ConfigError", "no exponent q given"))?;
    let report = workflow::certify_stage(&run.cfg, &problem, q)?;
    write_file(&run.out, "report.json", &report.to_json())?;
    if report.required_hold() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CONDITIONS, "ConditionsFailed", "hypotheses do not hold"))
    }
}

fn cmd_mu_curve(run: &Run) -> Outcome {
    let problem = run.cfg.problem()?;
    let q = run.cfg.subcritical_q()?;
    let report = gate(run, &problem, q)?;
    let constants = workflow::chosen_constants(&report).ok();
    let (curve, ann, _) =
        workflow::curve_stage(&problem, q, &run.cfg.k_range, &run.cfg.solver, &run.cfg.zeros, constants)?;
    write_file(&run.out, "mu.csv", &write_mu_csv(&workflow::mu_rows(&curve)))?;
    write_file(&run.out, "annotations.json", &serde_json::to_string_pretty(&ann).expect("plain data"))?;
    if run.gnuplot {
        write_file(&run.out, "mu.gp", gnuplot_script())?;
    }
    Ok(())
}

fn profile_csv(rows: &[biharm::mountainpass::ProfileRow]) -> String {
    let mut t = CsvTable::new(&["iteration", "node", "energy"]);
    for r in rows {
        t.push(vec![r.iteration.to_string(), r.node.to_string(), format_real(r.energy)]);
    }
    t.to_text()
}

fn cmd_solve_sub(run: &Run) -> Outcome {
    let problem = run.cfg.problem()?;
    let q = run.cfg.subcritical_q()?;
    let report = gate(run, &problem, q)?;
    let l_q = if problem.int_f_minus > 0.0 {
        workflow::chosen_constants(&report)?.k1q
    } else {
        f64::INFINITY
    };
    let first = workflow::first_stage(&problem, q, l_q, &run.cfg)?;
    write_file(&run.out, "first.json", &serde_json::to_string_pretty(&first).expect("plain data"))?;
    dump_field(run, "first_u", &first.u, "equation")?;

    let (curve, ann, mut ev) = workflow::curve_stage(
        &problem,
        q,
        &run.cfg.k_range,
        &run.cfg.solver,
        &run.cfg.zeros,
        workflow::chosen_constants(&report).ok(),
    )?;
    write_file(&run.out, "mu.csv", &write_mu_csv(&workflow::mu_rows(&curve)))?;
    write_file(&run.out, "annotations.json", &serde_json::to_string_pretty(&ann).expect("plain data"))?;
    let zeros = ann
        .zeros
        .clone()
        .ok_or_else(|| Failure::new(EXIT_SHAPE, "ShapeNotFound", ann.zeros_error.clone().unwrap_or_default()))?;

    let mp = workflow::mountain_stage(&problem, q, &mut ev, &zeros, &run.cfg)?;
    write_file(&run.out, "path_profile.csv", &profile_csv(&mp.profile))?;
    dump_field(run, "second_u", &mp.report.u, "equation")?;

    let sub = SubReport::new(q, l_q, first, mp, zeros);
    write_file(&run.out, "solutions.json", &sub.to_json())?;
    if sub.ordering_holds {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_CONDITIONS,
            "OrderingFailed",
            format!("energies {} and {} are not of opposite signs", sub.first.energy, sub.second.nu),
        ))
    }
}

fn cmd_mountain_pass(run: &Run) -> Outcome {
    let problem = run.cfg.problem()?;
    let q = run.cfg.subcritical_q()?;
    let report = gate(run, &problem, q)?;
    let constants = workflow::chosen_constants(&report).ok();
    let (curve, ann, mut ev) =
        workflow::curve_stage(&problem, q, &run.cfg.k_range, &run.cfg.solver, &run.cfg.zeros, constants)?;
    write_file(&run.out, "mu.csv", &write_mu_csv(&workflow::mu_rows(&curve)))?;
    write_file(&run.out, "annotations.json", &serde_json::to_string_pretty(&ann).expect("plain data"))?;
    let zeros = ann
        .zeros
        .clone()
        .ok_or_else(|| Failure::new(EXIT_SHAPE, "ShapeNotFound", ann.zeros_error.clone().unwrap_or_default()))?;
    let mp = workflow::mountain_stage(&problem, q, &mut ev, &zeros, &run.cfg)?;
    write_file(&run.out, "path_profile.csv", &profile_csv(&mp.profile))?;
    write_file(&run.out, "mountain_pass.json", &serde_json::to_string_pretty(&mp).expect("plain data"))?;
    dump_field(run, "mp_u", &mp.report.u, "equation")
}

fn cmd_solve_critical(run: &Run) -> Outcome {
    let problem = run.cfg.problem()?;
    let n = problem.geometry().critical_exponent();
    let q_cert = run.cfg.q.filter(|q| *q < n).unwrap_or(0.5 * (2.0 + n));
    let report = gate(run, &problem, q_cert)?;
    let constants = FrozenConstants::from_report(&problem, &report)?;
    let trace = continue_to_critical(&problem, constants, &run.cfg.continuation)?;
    for (j, s) in trace.steps.iter().enumerate() {
        if let Some(v) = &s.v {
            write_file(
                &run.out,
                &format!("v_q{j}.spectral.json"),
                &SpectralDump::from_field(v, "variational").to_json(),
            )?;
        }
    }
    write_file(&run.out, "trace.json", &trace.to_json())?;
    if let Some((kind, message)) = &trace.failure {
        return Err(Failure::new(code_for_kind(kind), kind, message.clone()));
    }
    if let Some(v) = trace.steps.last().and_then(|s| s.v.as_ref()) {
        let u = v.scale((n / 2.0).powf(1.0 / (n - 2.0)));
        dump_field(run, "critical_u", &u, "equation")?;
    }
    let checks = trace.steps.iter().all(|s| s.within_ball && s.laplacian_bound_holds && s.energy < 0.0)
        && trace.final_int_f_negative == Some(true)
        && trace.level_bound_holds == Some(true);
    if checks {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CONDITIONS, "ChecksFailed", "a continuation check failed; see trace.json"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let f = Failure::new(EXIT_CONFIG, "UsageError", e.to_string().trim().to_string());
            eprintln!("{}", error_json("", &f));
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let name = cli.command.name();
    let run = match load(&cli) {
        Ok(r) => r,
        Err(f) => {
            if let Some(dir) = &cli.out {
                let _ = write_file(dir, "error.json", &error_json(name, &f));
            }
            eprintln!("{}", error_json(name, &f));
            return ExitCode::from(f.code);
        }
    };
    let result = match cli.command {
        Command::Certify => cmd_certify(&run),
        Command::MuCurve => cmd_mu_curve(&run),
        Command::SolveSub => cmd_solve_sub(&run),
        Command::MountainPass => cmd_mountain_pass(&run),
        Command::SolveCritical => cmd_solve_critical(&run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = write_file(&run.out, "error.json", &error_json(name, &f));
            eprintln!("{}", error_json(name, &f));
            ExitCode::from(f.code)
        }
    }
}
