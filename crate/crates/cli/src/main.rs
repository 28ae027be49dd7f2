use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use twisted_fs::coeff::CoeffMap;
use twisted_fs::crossed::RegularRep;
use twisted_fs::io::{self, SystemFile};
use twisted_fs::multiplier::MultiplierMap;
use twisted_fs::reconstruct::reconstruct;
use twisted_fs::suite::{self, SuiteConfig};
use twisted_fs::system::library;
use twisted_fs::{TwistedSystem, DEFAULT_TOL};

const BUILTIN: &str = "builtin:";

#[derive(Parser)]
#[command(
    name = "twisted-fs",
    version,
    about = "Checks and constructions for finite twisted C*-dynamical systems"
)]
struct Cli {
    /// Absolute tolerance for every check.
    #[arg(long, global = true, env = "TWISTED_FS_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a system file and sweep the derived cocycle identity.
    Verify {
        /// System file, or builtin:<name>.
        system: String,
    },
    /// Dimension, center and block structure of the reduced crossed product.
    CrossedProduct {
        system: String,
        /// Write the image of the standard basis as a list of matrices.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Compare the kernel and complete-positivity verdicts for a map.
    PdCheck(MapSource),
    /// Reconstruct a representation and cyclic vector from a positive definite map.
    Gr {
        #[command(flatten)]
        source: MapSource,
        /// Output representation file; stdout if omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Emit the coefficient map of two vectors of a representation file.
    Coeff {
        representation: PathBuf,
        /// Index of the left vector in the file's vector list.
        #[arg(long, default_value_t = 0)]
        x: usize,
        /// Index of the right vector.
        #[arg(long, default_value_t = 0)]
        y: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the property suite with a fixed seed.
    Suite {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random draws per check.
        #[arg(long, default_value_t = 6)]
        samples: usize,
        /// Write the machine-readable report here.
        #[arg(long)]
        json_report: Option<PathBuf>,
        /// Systems to test; the bundled corpus if omitted.
        #[arg(long = "system")]
        systems: Vec<String>,
    },
    /// Write the bundled systems as system files into a directory.
    ExportCorpus { dir: PathBuf },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MapSource {
    /// Coefficient-map file.
    map: Option<PathBuf>,
    /// Use the unit map `g ↦ δ_{g,e}·id` of a system instead.
    #[arg(long)]
    unit: Option<String>,
}

/// A check failed (exit 1) or the input could not be used (exit 2).
enum Failure {
    Violation(String),
    Input(String),
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn system_file(spec: &str) -> Result<SystemFile, Failure> {
    match spec.strip_prefix(BUILTIN) {
        Some(name) => library::by_name(name)
            .map(|s| SystemFile::from_system(&s))
            .ok_or_else(|| Failure::Input(format!("unknown builtin system '{name}'"))),
        None => io::parse_system(&read(Path::new(spec))?)
            .map_err(|e| Failure::Input(format!("{spec}: {e}"))),
    }
}

fn load_system(spec: &str, tol: f64) -> Result<TwistedSystem, Failure> {
    let file = system_file(spec)?;
    let unchecked = file
        .assemble()
        .map_err(|e| Failure::Input(format!("{spec}: {e}")))?;
    file.build(tol).map_err(|e| {
        Failure::Violation(format!(
            "{spec}: worst residual {:.3e}: {e}",
            unchecked.report.worst()
        ))
    })
}

fn load_map(src: &MapSource, tol: f64) -> Result<CoeffMap, Failure> {
    match (&src.map, &src.unit) {
        (Some(path), _) => io::coeff_from_json(&read(path)?, tol).map_err(input),
        (None, Some(spec)) => Ok(CoeffMap::unit(Arc::new(load_system(spec, tol)?))),
        (None, None) => Err(Failure::Input("no map given".into())),
    }
}

fn verify(spec: &str, tol: f64) -> Outcome {
    let file = system_file(spec)?;
    let u = file.assemble().map_err(input)?;
    let r = u.report;
    let sweep = u.system.inverse_cocycle_sweep();
    println!(
        "system {} (|G| = {}, dim A = {})",
        u.system.name(),
        u.system.order(),
        u.system.algebra().dim()
    );
    for (name, v) in [
        ("action", r.action),
        ("cocycle", r.cocycle),
        ("normalization", r.normalization),
        ("unitarity", r.unitarity),
        ("inverse_cocycle_sweep", sweep),
    ] {
        println!("  {name:<22} {v:.3e}");
    }
    let worst = r.worst().max(sweep);
    if worst <= tol {
        println!("PASS (worst {worst:.3e} <= {tol:.1e})");
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "worst residual {worst:.3e} exceeds {tol:.1e}"
        )))
    }
}

fn crossed(spec: &str, export: Option<&Path>, tol: f64) -> Outcome {
    let s = load_system(spec, tol)?;
    let reg = RegularRep::new(&s);
    let st = reg.structure();
    println!("dim {}, center {}", st.dim, st.center_dim);
    let blocks: Vec<String> = st
        .blocks
        .iter()
        .map(|(n, m)| format!("M_{n} (multiplicity {m})"))
        .collect();
    println!("blocks: {}", blocks.join(", "));
    if let Some(path) = export {
        let docs: Vec<_> = reg.basis().iter().map(io::matrix_to_doc).collect();
        let text = serde_json::to_string_pretty(&docs).map_err(input)?;
        fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        println!("wrote {} basis images to {}", docs.len(), path.display());
    }
    Ok(())
}

fn pd_check(src: &MapSource, tol: f64) -> Outcome {
    let t = load_map(src, tol)?;
    let kernel = t.positive_definite(tol);
    let cp = MultiplierMap::new(&t).cp_report(tol);
    let verdict = |p: bool| if p { "positive" } else { "not positive" };
    println!(
        "kernel margin {:.3e} (relative {:.3e}): {}",
        kernel.margin(),
        kernel.relative_margin(),
        verdict(kernel.positive)
    );
    println!(
        "cp margin     {:.3e} (relative {:.3e}): {}",
        cp.margin(),
        cp.relative_margin(),
        verdict(cp.positive)
    );
    if kernel.positive == cp.positive {
        println!("verdicts agree");
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "VERDICTS DISAGREE: kernel margin {:.3e}, cp margin {:.3e}",
            kernel.relative_margin(),
            cp.relative_margin()
        )))
    }
}

fn gr(src: &MapSource, out: Option<&Path>, tol: f64) -> Outcome {
    let t = load_map(src, tol)?;
    let real = reconstruct(&t, tol).map_err(|e| Failure::Violation(e.to_string()))?;
    let residual = real.coefficient().dist(&t);
    eprintln!(
        "carrier dim {}, reproduction residual {residual:.3e}",
        real.rep.module().carrier_dim()
    );
    write_or_print(
        out,
        &io::representation_to_json(&real.rep, std::slice::from_ref(&real.vector)),
    )
}

fn coeff(path: &Path, x: usize, y: usize, out: Option<&Path>, tol: f64) -> Outcome {
    let (rep, vectors) = io::representation_from_json(&read(path)?, tol).map_err(input)?;
    let pick = |i: usize| {
        vectors.get(i).ok_or_else(|| {
            Failure::Input(format!(
                "vector index {i} out of range ({} stored)",
                vectors.len()
            ))
        })
    };
    let t = rep.coefficient(pick(x)?, pick(y)?);
    write_or_print(out, &io::coeff_to_json(&t))
}

fn run_suite(
    seed: u64,
    samples: usize,
    report: Option<&Path>,
    specs: &[String],
    tol: f64,
) -> Outcome {
    let systems: Vec<Arc<TwistedSystem>> = if specs.is_empty() {
        library::corpus().into_iter().map(Arc::new).collect()
    } else {
        specs
            .iter()
            .map(|s| load_system(s, tol).map(Arc::new))
            .collect::<Result<_, _>>()?
    };
    let cfg = SuiteConfig {
        seed,
        tol,
        samples,
        ..SuiteConfig::default()
    };
    let r = suite::run(&systems, &cfg);
    for item in &r.items {
        println!(
            "{} {:<40} {}",
            if item.passed { "PASS" } else { "FAIL" },
            item.key,
            item.system
        );
    }
    if let Some(p) = report {
        fs::write(p, r.to_json()).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    }
    let failed = r.failures().count();
    if failed == 0 {
        println!("{} checks passed", r.items.len());
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "{failed} of {} checks failed",
            r.items.len()
        )))
    }
}

fn export_corpus(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(input)?;
    for s in library::corpus() {
        let path = dir.join(format!("{}.json", s.name()));
        fs::write(&path, io::system_to_json(&s) + "\n").map_err(input)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = cli.tol;
    let outcome = match &cli.command {
        Command::Verify { system } => verify(system, tol),
        Command::CrossedProduct { system, export } => crossed(system, export.as_deref(), tol),
        Command::PdCheck(src) => pd_check(src, tol),
        Command::Gr { source, out } => gr(source, out.as_deref(), tol),
        Command::Coeff {
            representation,
            x,
            y,
            out,
        } => coeff(representation, *x, *y, out.as_deref(), tol),
        Command::Suite {
            seed,
            samples,
            json_report,
            systems,
        } => run_suite(*seed, *samples, json_report.as_deref(), systems, tol),
        Command::ExportCorpus { dir } => export_corpus(dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
