use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use sysmine::algebra::{parse_structure, Structure, Valuation};
use sysmine::composition::{commutes, compose, dissenting_pairs, harmonic_pairs};
use sysmine::export::{
    atoms_json, module_dot, module_json, schema_dot, symbolic_json, system_net_dot, versioned_json,
};
use sysmine::lifting::{replay, NetSchema, PlaceRoleConfig, SystemNet};
use sysmine::logkit::{parse_log, EventLog, LogFormat, MinedRun, RolePolicy};
use sysmine::net::{Module, NodeId};
use sysmine::occurrence::as_occurrence;
use sysmine::pipeline::{run_steps, system_steps, StepError};

#[derive(Parser)]
#[command(name = "sysmine", version, about = "Mine runs and system nets from event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Event log (.jsonl or .csv)
    #[arg(long)]
    log: PathBuf,
    /// Role policy JSON
    #[arg(long)]
    roles: PathBuf,
    /// Also write Graphviz files when set to dot
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, default_value = "sysmine-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Steps 1-3: compose the agents' modules into a partially ordered run
    MineRun(RunArgs),
    /// Steps 1-8: run, system atoms, system net, schema and replay check
    MineSystem {
        #[command(flatten)]
        run: RunArgs,
        /// Structure JSON (sorts, functions, variables)
        #[arg(long)]
        structure: PathBuf,
        /// Place-role configuration JSON
        #[arg(long)]
        place_roles: PathBuf,
    },
    /// Composition diagnostics for two module files
    Check { left: PathBuf, right: PathBuf },
    /// Render a module, system net or schema artifact
    Export {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
    },
    /// Replay a run artifact on a system net artifact
    Replay {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        run: PathBuf,
        /// System atoms artifact holding the witness valuations
        #[arg(long)]
        atoms: PathBuf,
        #[arg(long)]
        structure: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MineRun(args) => mine_run_cmd(&args),
        Command::MineSystem {
            run,
            structure,
            place_roles,
        } => mine_system_cmd(&run, &structure, &place_roles),
        Command::Check { left, right } => check_cmd(&left, &right),
        Command::Export { input, format } => export_cmd(&input, format),
        Command::Replay {
            net,
            run,
            atoms,
            structure,
        } => replay_cmd(&net, &run, &atoms, &structure),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn open(path: &Path) -> Result<File, String> {
    File::open(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_inputs(args: &RunArgs) -> Result<(EventLog, RolePolicy), StepError> {
    let log = open(&args.log)
        .and_then(|f| parse_log(f, LogFormat::from_path(&args.log)).map_err(|e| e.to_string()))
        .map_err(|e| StepError::new(1, format!("cannot load log: {e}")))?;
    let policy = open(&args.roles)
        .and_then(|f| RolePolicy::from_json(f).map_err(|e| e.to_string()))
        .map_err(|e| StepError::new(2, format!("cannot load roles: {e}")))?;
    Ok((log, policy))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn mined_run(args: &RunArgs) -> Result<(EventLog, RolePolicy, MinedRun), String> {
    let (log, policy) = load_inputs(args).map_err(|e| e.to_string())?;
    let mined = run_steps(&log, &policy).map_err(|e| e.to_string())?;
    for w in &mined.warnings {
        eprintln!("warning: {w}");
    }
    Ok((log, policy, mined))
}

fn write_run(args: &RunArgs, mined: &MinedRun) -> Result<(), String> {
    let module = mined.run.module();
    write(&args.out_dir, "run.json", &module_json(module))?;
    if args.format == Format::Dot {
        write(&args.out_dir, "run.dot", &module_dot(module))?;
    }
    Ok(())
}

fn mine_run_cmd(args: &RunArgs) -> Result<(), String> {
    let (log, _, mined) = mined_run(args)?;
    write_run(args, &mined)?;
    let module = mined.run.module();
    let pairs = mined.unordered_event_pairs();
    println!("events: {}", log.len());
    println!("agents: {}", mined.agents.join(", "));
    println!("transitions: {}", module.net().transitions().len());
    println!("places: {}", module.net().places().len());
    println!("interface elements: {}", module.left().len() + module.right().len());
    println!("unordered event pairs: {}", pairs.len());
    for (a, b) in &pairs {
        println!("  {a} || {b}");
    }
    Ok(())
}

fn mine_system_cmd(args: &RunArgs, structure: &Path, place_roles: &Path) -> Result<(), String> {
    let s = open(structure)
        .and_then(|f| parse_structure(f).map_err(|e| e.to_string()))
        .map_err(|e| StepError::new(4, format!("cannot load structure: {e}")).to_string())?;
    let config = open(place_roles)
        .and_then(|f| PlaceRoleConfig::from_json(f).map_err(|e| e.to_string()))
        .map_err(|e| StepError::new(4, format!("cannot load place roles: {e}")).to_string())?;
    let (log, policy, mined) = mined_run(args)?;
    write_run(args, &mined)?;
    let m = system_steps(mined, &log, &policy, &s, &config).map_err(|e| e.to_string())?;

    let dir = &args.out_dir;
    write(dir, "atoms.json", &atoms_json(&m.atoms))?;
    write(dir, "symbolic.json", &symbolic_json(&m.symbolic))?;
    write(dir, "system_net.json", &versioned_json(&m.net))?;
    write(dir, "schema.json", &versioned_json(&m.schema))?;
    write(dir, "replay.json", &versioned_json(&m.report))?;
    if args.format == Format::Dot {
        write(dir, "symbolic.dot", &module_dot(&m.symbolic.module))?;
        write(dir, "system_net.dot", &system_net_dot(&m.net))?;
        write(dir, "schema.dot", &schema_dot(&m.schema))?;
    }

    let run = m.mined.run.module();
    let sym = m.symbolic.module.net();
    println!("step 1: {} events", log.len());
    println!("step 2: {} agent modules", m.mined.agents.len());
    println!(
        "step 3: run with {} transitions, {} places",
        run.net().transitions().len(),
        run.net().places().len()
    );
    println!("step 4: {} annotated atoms", m.annotated.len());
    let vars: usize = m.atoms.iter().map(|a| a.variables.len()).sum();
    println!("step 5: {} system atoms, {vars} variables", m.atoms.len());
    println!(
        "step 6: symbolic module with {} transitions, {} places",
        sym.transitions().len(),
        sym.places().len()
    );
    println!(
        "step 7: system net with {} transitions, {} places, {} initial tokens",
        m.net.transitions.len(),
        m.net.places.len(),
        m.net.marking.total()
    );
    let symbols: Vec<String> = m
        .schema
        .initial
        .iter()
        .map(|(p, t)| format!("{p} = elm({})", t.symbol))
        .collect();
    println!("step 8: schema {}", symbols.join(", "));
    println!("conformant: {}", if m.report.conformant { "yes" } else { "no" });
    Ok(())
}

fn load_module(path: &Path) -> Result<Module, String> {
    let f = open(path)?;
    serde_json::from_reader(f).map_err(|e| format!("{}: {e}", path.display()))
}

fn check_cmd(left: &Path, right: &Path) -> Result<(), String> {
    let a = load_module(left)?;
    let b = load_module(right)?;
    let pairs = harmonic_pairs(&a, &b);
    println!("harmonic pairs: {}", pairs.len());
    for p in &pairs {
        println!("  {} ~ {} ({})", p.left_node, p.right_node, p.label);
    }
    println!("commutes: {}", if commutes(&a, &b) { "yes" } else { "no" });
    match (as_occurrence(&a), as_occurrence(&b)) {
        (Ok(oa), Ok(ob)) => {
            let dissent = dissenting_pairs(&oa, &ob);
            if dissent.is_empty() {
                println!("dissent: none");
            } else {
                println!("dissent: {}", dissent.len());
                for (p, q) in &dissent {
                    println!("  {} / {}", p.label, q.label);
                }
            }
        }
        (Err(e), _) => println!("dissent: not applicable, left module: {e}"),
        (_, Err(e)) => println!("dissent: not applicable, right module: {e}"),
    }
    match compose(&a, &b) {
        Ok(c) if as_occurrence(&c).is_ok() => println!("composition is an occurrence module"),
        Ok(_) => println!("composition is not an occurrence module"),
        Err(e) => println!("composition fails: {e}"),
    }
    Ok(())
}

fn export_cmd(input: &Path, format: Format) -> Result<(), String> {
    let text = fs::read_to_string(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", input.display()))?;
    let bad = |e: serde_json::Error| format!("{}: {e}", input.display());
    let out = if value.get("initial").is_some() {
        let schema: NetSchema = serde_json::from_value(value).map_err(bad)?;
        match format {
            Format::Dot => schema_dot(&schema),
            Format::Json => versioned_json(&schema),
        }
    } else if value.get("marking").is_some() {
        let net: SystemNet = serde_json::from_value(value).map_err(bad)?;
        match format {
            Format::Dot => system_net_dot(&net),
            Format::Json => versioned_json(&net),
        }
    } else {
        let module: Module = serde_json::from_value(value).map_err(bad)?;
        match format {
            Format::Dot => module_dot(&module),
            Format::Json => module_json(&module),
        }
    };
    print!("{out}");
    Ok(())
}

#[derive(Deserialize)]
struct AtomsFile {
    atoms: Vec<AtomWitness>,
}

#[derive(Deserialize)]
struct AtomWitness {
    transition: NodeId,
    witness: Valuation,
}

fn replay_cmd(net: &Path, run: &Path, atoms: &Path, structure: &Path) -> Result<(), String> {
    let s: Structure = open(structure).and_then(|f| parse_structure(f).map_err(|e| e.to_string()))?;
    let net: SystemNet = serde_json::from_reader(open(net)?).map_err(|e| e.to_string())?;
    let run = as_occurrence(&load_module(run)?).map_err(|e| e.to_string())?;
    let atoms: AtomsFile = serde_json::from_reader(open(atoms)?).map_err(|e| e.to_string())?;
    let witnesses: BTreeMap<NodeId, Valuation> = atoms
        .atoms
        .into_iter()
        .map(|a| (a.transition, a.witness))
        .collect();
    let report = replay(&net, &s, &run, &witnesses).map_err(|e| e.to_string())?;
    println!("conformant: {}", if report.conformant { "yes" } else { "no" });
    if let Some(b) = &report.blocking {
        println!("blocked at: {}", b.transition);
        for (place, token) in &b.missing {
            println!("  missing ({}) on {place}", token.join(", "));
        }
    }
    if report.conformant {
        println!("sequence: {}", report.sequence.join(" ; "));
    }
    Ok(())
}
