//! Command-line workflow: constants, index checks, certification, solving,
//! and full reports for problems described by TOML config files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conequill::certify::{certify_problem, Pattern};
use conequill::config::ProblemConfig;
use conequill::index::{check_i0, check_i1};
use conequill::problem::ProblemSpec;
use conequill::report::{
    certificate_block, condition_block, constants_block, decimal, solver_block, ReportDocument,
    SolverBlock,
};
use conequill::solver::{default_start, picard_solve, shell_check};

#[derive(Parser)]
#[command(
    name = "conequill",
    version,
    about = "Existence certificates, multiplicity counts, and solution curves \
             for perturbed Hammerstein integral equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the constant table of a problem
    Constants { config: PathBuf },
    /// Evaluate the index conditions at the given radii
    CheckIndex {
        config: PathBuf,
        /// Comma-separated list of radii
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
    },
    /// Match condition results against the multiplicity patterns
    Certify { config: PathBuf },
    /// Iterate the fixed-point operator towards a certified solution
    Solve { config: PathBuf },
    /// Full report: constants, conditions, certificate, and solve
    Report {
        config: PathBuf,
        /// Output path for the JSON document
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 2;
const EXIT_NO_CERTIFICATE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load(path: &Path) -> conequill::Result<(ProblemConfig, ProblemSpec, ReportDocument)> {
    let config = ProblemConfig::from_path(path)?;
    let problem = config.build()?;
    let document = ReportDocument::new(&config.digest()?);
    Ok((config, problem, document))
}

fn run(command: Command) -> conequill::Result<u8> {
    match command {
        Command::Constants { config } => {
            let (_, problem, mut document) = load(&config)?;
            document.constants = Some(constants_block(&problem)?);
            println!("{}", document.to_json()?);
            Ok(EXIT_OK)
        }
        Command::CheckIndex { config, rho } => {
            let (_, problem, mut document) = load(&config)?;
            for &r in &rho {
                document.conditions.push(condition_block(&check_i1(&problem, r)?));
                document.conditions.push(condition_block(&check_i0(&problem, r)?));
            }
            println!("{}", document.to_json()?);
            Ok(EXIT_OK)
        }
        Command::Certify { config } => {
            let (_, problem, mut document) = load(&config)?;
            let outcome = certify_problem(&problem)?;
            document.conditions = outcome.conditions.iter().map(condition_block).collect();
            document.certificate = Some(certificate_block(&outcome.certificate));
            println!("{}", document.to_json()?);
            Ok(exit_for(outcome.certificate.pattern))
        }
        Command::Solve { config } => {
            let (_, problem, mut document) = load(&config)?;
            let outcome = certify_problem(&problem)?;
            document.certificate = Some(certificate_block(&outcome.certificate));
            document.solver = Some(solve_block(&problem, &outcome));
            let csv_path = config.with_extension("solution.csv");
            write_csv_if_solved(&document, &csv_path)?;
            println!("{}", document.to_json()?);
            Ok(EXIT_OK)
        }
        Command::Report { config, out } => {
            let (_, problem, mut document) = load(&config)?;
            document.constants = Some(constants_block(&problem)?);
            let outcome = certify_problem(&problem)?;
            document.conditions = outcome.conditions.iter().map(condition_block).collect();
            document.certificate = Some(certificate_block(&outcome.certificate));
            document.solver = Some(solve_block(&problem, &outcome));
            let csv_path = out.with_extension("solution.csv");
            write_csv_if_solved(&document, &csv_path)?;
            std::fs::write(&out, document.to_json()?)?;
            Ok(exit_for(outcome.certificate.pattern))
        }
    }
}

fn exit_for(pattern: Pattern) -> u8 {
    if pattern == Pattern::None {
        EXIT_NO_CERTIFICATE
    } else {
        EXIT_OK
    }
}

fn solve_block(
    problem: &ProblemSpec,
    outcome: &conequill::certify::CertifyOutcome,
) -> SolverBlock {
    let start = default_start(problem, Some(&outcome.ledger));
    match picard_solve(problem, &start) {
        Ok(report) => {
            let report = shell_check(problem, report, &outcome.ledger);
            let trivial = report.solution.sup_norm() < 1e-9;
            let note = trivial.then(|| "solution is trivial (identically zero)".to_string());
            solver_block(&report, note)
        }
        Err(e) => SolverBlock {
            converged: false,
            residual: decimal(f64::NAN),
            iterations: 0,
            cone_ok: false,
            shell: None,
            nodes: problem.solver.nodes,
            solution: Vec::new(),
            note: Some(format!(
                "iteration failed ({e}); this does not contradict the certificate, \
                 which is established independently of the solver"
            )),
        },
    }
}

fn write_csv_if_solved(document: &ReportDocument, path: &Path) -> conequill::Result<()> {
    if let Some(solver) = &document.solver {
        if !solver.solution.is_empty() {
            let mut csv = String::from("node,value\n");
            for point in &solver.solution {
                csv.push_str(&point.t);
                csv.push(',');
                csv.push_str(&point.value);
                csv.push('\n');
            }
            std::fs::write(path, csv)?;
        }
    }
    Ok(())
}
