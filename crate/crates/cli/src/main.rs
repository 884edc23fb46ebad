mod input;
mod report;

use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hamflow::classify::{identify, with_positive};
use hamflow::densities::{check_integrability_with, separant_density, CheckOptions, FlowEquation};
use hamflow::hamiltonian::{catalog_get, catalog_ids, catalog_verify, flow, Hamiltonian};
use hamflow::jet::{variational_derivative, DEFAULT_NODE_BUDGET};
use hamflow::transform::{conserved_flux, reciprocal, TransformTrail};
use serde_json::json;

use input::SourceText;
use report::{Failure, Format, Outcome, Report};

/// Integrability checks, transformations and classification of Hamiltonian
/// evolution equations u_t = D_x(δH/δu).
#[derive(Parser, Debug)]
#[command(name = "hamflow", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Hamiltonian density H(x, u, u1); `-` reads stdin, `@path` a file.
    #[arg(long, global = true, conflicts_with = "equation", allow_hyphen_values = true)]
    hamiltonian: Option<String>,
    /// Right-hand side F of u_t = F; `-` reads stdin, `@path` a file.
    #[arg(long, global = true, allow_hyphen_values = true)]
    equation: Option<String>,
    /// Wall-clock limit in seconds for the density checker.
    #[arg(long, global = true)]
    timeout: Option<f64>,
    #[arg(long, global = true, env = "HAMFLOW_NODE_BUDGET")]
    node_budget: Option<usize>,
    /// Positivity assumption `name>0`; may be repeated.
    #[arg(long, global = true, value_name = "NAME>0")]
    assume: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs the integrability conditions up to the given order.
    Check {
        #[arg(long, default_value_t = 3)]
        order: i64,
    },
    /// Prints the canonical densities and fluxes.
    Densities {
        #[arg(long, default_value_t = 3)]
        max_n: i64,
    },
    /// Prints the evolution equation of a Hamiltonian.
    Flow,
    /// Prints the variational derivative of a Hamiltonian.
    Vder,
    /// Applies a JSON transformation trail.
    Transform {
        #[arg(long)]
        spec: String,
    },
    /// Reciprocal transformation with density rho (default: the separant density).
    Reciprocal {
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<String>,
        /// Flux of rho; computed when omitted.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
    },
    /// Identifies the canonical form of a Hamiltonian.
    Classify,
    /// Reference catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    List,
    Verify {
        id: Option<String>,
        #[arg(long, default_value_t = 3)]
        order: i64,
        #[arg(long, conflicts_with = "id")]
        all: bool,
    },
}

impl Global {
    fn options(&self) -> Result<CheckOptions, Failure> {
        let timeout = match self.timeout {
            Some(t) if !(t.is_finite() && t > 0.0) => return Err(Failure::usage("--timeout must be positive")),
            t => t.map(Duration::from_secs_f64),
        };
        Ok(CheckOptions { node_budget: self.node_budget.unwrap_or(DEFAULT_NODE_BUDGET), timeout })
    }

    fn assumptions(&self) -> Result<Vec<String>, Failure> {
        self.assume
            .iter()
            .map(|a| {
                let name = a.strip_suffix(">0").map(str::trim).unwrap_or("");
                let ok = !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_');
                if ok {
                    Ok(name.to_string())
                } else {
                    Err(Failure::usage(format!("--assume expects NAME>0, got `{a}`")))
                }
            })
            .collect()
    }

    fn hamiltonian(&self) -> Result<Hamiltonian, Failure> {
        let src = self.hamiltonian.as_ref().ok_or_else(|| Failure::usage("this command needs --hamiltonian"))?;
        let e = SourceText::resolve(src)?.parse()?;
        Hamiltonian::new(e).map_err(|e| Failure::usage(e.to_string()))
    }

    fn flow(&self) -> Result<FlowEquation, Failure> {
        if self.hamiltonian.is_some() {
            return flow(&self.hamiltonian()?).map_err(fail);
        }
        let src = self
            .equation
            .as_ref()
            .ok_or_else(|| Failure::usage("pass --hamiltonian or --equation"))?;
        let e = SourceText::resolve(src)?.parse()?;
        FlowEquation::new(e).map_err(|e| Failure::usage(e.to_string()))
    }
}

fn fail(e: impl std::fmt::Display) -> Failure {
    let message = e.to_string();
    if message.contains("resource limit") {
        Failure::resource(message)
    } else {
        Failure::usage(message)
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let g = &cli.global;
    let positive = g.assumptions()?;
    match &cli.command {
        Command::Check { order } | Command::Densities { max_n: order } => {
            let name = if matches!(cli.command, Command::Check { .. }) { "check" } else { "densities" };
            let f = g.flow()?;
            let seq = check_integrability_with(&f, *order, &g.options()?).map_err(fail)?;
            Ok(Report::new(name).result("F", f.rhs().clone()).with_sequence(&seq))
        }
        Command::Flow => {
            let h = g.hamiltonian()?;
            let f = flow(&h).map_err(fail)?;
            Ok(Report::new("flow").result("F", f.rhs().clone()))
        }
        Command::Vder => {
            let h = g.hamiltonian()?;
            let e = variational_derivative(&h.h).map_err(fail)?;
            Ok(Report::new("vder").result("E(H)", e))
        }
        Command::Transform { spec } => {
            let text = std::fs::read_to_string(spec).map_err(|e| Failure::usage(format!("reading {spec}: {e}")))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{spec}: {e}")))?;
            let trail = TransformTrail::from_json(&value).map_err(|e| Failure::usage(e.to_string()))?;
            let mut r = Report::new("transform");
            r.trail = Some(trail.to_json());
            if g.hamiltonian.is_some() && trail.steps.iter().all(|s| s.is_hamiltonian()) {
                let h = trail.replay_hamiltonian(&g.hamiltonian()?).map_err(fail)?;
                let f = flow(&h).map_err(fail)?;
                Ok(r.result("H", h.h.clone()).result("F", f.rhs().clone()))
            } else {
                let f = trail.replay_flow(&g.flow()?).map_err(fail)?;
                Ok(r.result("F", f.rhs().clone()))
            }
        }
        Command::Reciprocal { rho, theta } => {
            let f = g.flow()?;
            let rho = match rho {
                Some(s) => SourceText::resolve(s)?.parse()?,
                None => separant_density(&f).map_err(fail)?,
            };
            let theta = match theta {
                Some(s) => SourceText::resolve(s)?.parse()?,
                None => conserved_flux(&f, &rho).map_err(fail)?,
            };
            let out = reciprocal(&f, &rho, &theta).map_err(fail)?;
            Ok(Report::new("reciprocal")
                .result("rho", rho)
                .result("theta", theta)
                .result("F", out.rhs().clone()))
        }
        Command::Classify => {
            let h = g.hamiltonian()?;
            let c = with_positive(&positive, || identify(&h)).map_err(fail)?;
            let mut r = Report::new("classify");
            r.outcome = if c.is_classified() { Outcome::Ok } else { Outcome::Violated };
            r.id = c.is_classified().then(|| c.canonical_id.clone());
            r.bindings = c.bindings.clone();
            r.trail = Some(c.trail.to_json());
            r.notes.extend(c.obstructions.iter().map(|o| format!("obstruction: {} ({})", o.description, o.equation)));
            r.notes.extend(c.conditions.iter().filter(|c| c.status.label() != "holds").map(|c| {
                format!("{}: {}", c.relation.label, c.status.label())
            }));
            r.notes.extend(c.diagnostics.iter().cloned());
            r.details = Some(c.to_json());
            Ok(r)
        }
        Command::Catalog { action: CatalogAction::List } => {
            let mut r = Report::new("catalog list");
            let mut rows = Vec::new();
            for id in catalog_ids() {
                let e = catalog_get(id).map_err(fail)?;
                let f = e.flow.ctx.normalize(e.printed_flow.clone()).map_err(fail)?;
                r.results.push((id.to_string(), f));
                rows.push(json!({
                    "id": id,
                    "primary": e.primary,
                    "hamiltonian": e.hamiltonian.as_ref().map(|h| h.h.to_string()),
                    "notes": e.notes,
                }));
            }
            r.details = Some(json!(rows));
            Ok(r)
        }
        Command::Catalog { action: CatalogAction::Verify { id, order, all } } => {
            let ids: Vec<String> = match (id, all) {
                (Some(id), false) => vec![id.clone()],
                (None, true) => catalog_ids().iter().map(|s| s.to_string()).collect(),
                _ => return Err(Failure::usage("catalog verify needs an ID or --all")),
            };
            let opts = g.options()?;
            let reports = std::thread::scope(|s| {
                let handles: Vec<_> =
                    ids.iter().map(|id| s.spawn(|| catalog_verify(id, *order, &opts))).collect();
                handles.into_iter().map(|h| h.join().expect("verification thread")).collect::<Vec<_>>()
            });
            let mut r = Report::new("catalog verify");
            let mut rows = Vec::new();
            for rep in reports {
                let rep = rep.map_err(fail)?;
                let mut outcome = Outcome::of(&rep.sequence.status);
                if !rep.passed() && outcome == Outcome::Ok {
                    outcome = Outcome::Violated;
                }
                rows.push(json!({
                    "id": rep.id,
                    "status": outcome.label(),
                    "even_triviality": rep.even_triviality.iter().all(|t| t.exact),
                    "separant": rep.separant_matches.is_equal(),
                    "printed_flow": rep.printed_flow_matches.is_equal(),
                }));
                if ids.len() == 1 {
                    r = r.with_sequence(&rep.sequence);
                    r.id = Some(rep.id.clone());
                } else {
                    r.notes.push(format!("{}: {}", rep.id, outcome.label()));
                }
                r.outcome = r.outcome.and(outcome);
            }
            r.details = Some(json!(rows));
            Ok(r)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(r) => {
            print!("{}", r.render(cli.global.format));
            ExitCode::from(r.exit_code() as u8)
        }
        Err(f) => {
            if cli.global.format == Format::Json && f.code == 3 {
                let mut r = Report::new("error");
                r.outcome = Outcome::Resource;
                r.notes.push(f.message.clone());
                let doc = r.to_json();
                println!("{}", serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
