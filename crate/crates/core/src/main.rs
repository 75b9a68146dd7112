use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use nonosc::certify::{
    certify, emit_report, prepare, Algorithm, CertifyError, CertifyOptions, ReportFormat,
};
use nonosc::compound::{
    additive_compound, rank_one_compound_projection, rank_one_projection, second_compound,
};
use nonosc::lyapunov::{
    algorithm1, defective_sum_screen, spectral_word_screen, DEFAULT_MAX_ITER, DEFAULT_MAX_LEN,
    DEFAULT_MAX_WORDS,
};
use nonosc::netmodel::{parse_network, Network, ParseError};
use nonosc::ratlinalg::{rat, RatMatrix};
use nonosc::simulate::{MassActionModel, MassActionParams, SimulateError};
use nonosc::siphons::{classified_siphons, SiphonError};
use nonosc::stoich::rank_one_matrices;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Siphon(#[from] SiphonError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "nonosc",
    version,
    about = "Certify robust non-oscillation of reaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Iterative,
    Closure,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and print the certificate.
    Certify {
        file: PathBuf,
        /// Species kept as reduced coordinates, comma separated.
        #[arg(long, value_delimiter = ',')]
        independent: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "iterative")]
        algorithm: AlgorithmArg,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_word_len: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
        max_words: usize,
        /// Write the JSON certificate here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print the text report (default when --json is absent).
        #[arg(long)]
        text: bool,
    },
    /// List minimal siphons and whether they are trivial.
    Siphons { file: PathBuf },
    /// Print a basis of conservation laws and the nonnegative extreme rays.
    Conservation { file: PathBuf },
    /// Print every rank-one A_l and its additive compound of the given order.
    Compound {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, value_delimiter = ',')]
        independent: Option<Vec<String>>,
    },
    /// Search for instability witnesses of the first- or second-order inclusion.
    Instability {
        file: PathBuf,
        #[arg(long, conflicts_with = "second_order")]
        first_order: bool,
        #[arg(long)]
        second_order: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_word_len: usize,
        #[arg(long, value_delimiter = ',')]
        independent: Option<Vec<String>>,
    },
    /// Integrate mass-action dynamics with the second-compound variational system.
    Simulate {
        file: PathBuf,
        /// Parameter file with `k1 = ...` and optionally `total1 = ...` lines.
        #[arg(long)]
        rates: PathBuf,
        /// Conserved totals, comma separated; overrides the parameter file.
        #[arg(long, value_delimiter = ',')]
        totals: Option<Vec<f64>>,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Initial reduced state (independent species order).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Initial variational state; all ones by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        independent: Option<Vec<String>>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(path: &Path) -> Result<Network, CliError> {
    parse_network(&read(path)?).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn print_matrix(out: &mut impl Write, name: &str, m: &RatMatrix) {
    let _ = writeln!(out, "{name} =");
    for row in m.to_strings() {
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Certify {
            file,
            independent,
            algorithm,
            max_iter,
            max_word_len,
            max_words,
            json,
            text,
        } => {
            let net = load(&file)?;
            let opts = CertifyOptions {
                independent,
                algorithm: match algorithm {
                    AlgorithmArg::Iterative => Algorithm::Iterative,
                    AlgorithmArg::Closure => Algorithm::Closure,
                },
                max_iter,
                max_word_len,
                max_words,
            };
            let cert = certify(&net, &opts)?;
            if let Some(path) = &json {
                write_file(path, &emit_report(&cert, ReportFormat::Json))?;
            }
            if text || json.is_none() {
                let _ = out.write_all(&emit_report(&cert, ReportFormat::Text));
            }
            Ok(if cert.verdict.is_certified() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Siphons { file } => {
            let net = load(&file)?;
            let (basis, _) = prepare(&net, None)?;
            for s in classified_siphons(&net, &basis.nonneg_rays)? {
                let names: Vec<&str> = s.species.iter().map(|&i| net.species_name(i)).collect();
                let kind = if s.trivial { "trivial" } else { "critical" };
                let _ = writeln!(out, "{{{}}} {kind}", names.join(","));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Conservation { file } => {
            let net = load(&file)?;
            let (basis, _) = prepare(&net, None)?;
            let names: Vec<&str> = net.species().iter().map(|s| s.name.as_str()).collect();
            let _ = writeln!(out, "species: {}", names.join(" "));
            let _ = writeln!(out, "conservation laws (c = {}):", basis.dim());
            for r in &basis.rows {
                let v: Vec<String> = r.iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "  [{}]", v.join(", "));
            }
            let _ = writeln!(out, "nonnegative rays:");
            for r in &basis.nonneg_rays {
                let v: Vec<String> = r.iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "  [{}]", v.join(", "));
            }
            let conservative = basis.covers_all_species(net.num_species());
            let _ = writeln!(
                out,
                "conservative: {}",
                if conservative { "yes" } else { "no" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compound {
            file,
            order,
            independent,
        } => {
            let net = load(&file)?;
            let (_, rs) = prepare(&net, independent.as_deref())?;
            for (l, a) in rank_one_matrices(&rs).iter().enumerate() {
                let p = rs.pairs[l];
                let _ = writeln!(
                    out,
                    "pair {} ({}, {})",
                    l + 1,
                    net.reactions()[p.reaction].label,
                    net.species_name(p.species)
                );
                print_matrix(&mut out, &format!("A{}", l + 1), a);
                let ak = additive_compound(a, order).map_err(|e| CliError::Usage(e.to_string()))?;
                print_matrix(&mut out, &format!("A{}^({order})", l + 1), &ak);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Instability {
            file,
            first_order: _,
            second_order,
            max_word_len,
            independent,
        } => {
            let net = load(&file)?;
            let (_, rs) = prepare(&net, independent.as_deref())?;
            if let Some((l, f)) = rs
                .factors
                .iter()
                .enumerate()
                .find(|(_, f)| f.gain() >= rat(0))
            {
                return Err(CliError::Usage(format!(
                    "pair {} has wᵀv = {} >= 0; projections undefined",
                    l + 1,
                    f.gain()
                )));
            }
            let mut mats = rank_one_matrices(&rs);
            let projections: Vec<RatMatrix> = if second_order {
                mats = mats.iter().map(second_compound).collect();
                rs.factors
                    .iter()
                    .map(|f| rank_one_compound_projection(&f.v, &f.w).expect("gain checked"))
                    .collect()
            } else {
                rs.factors
                    .iter()
                    .map(|f| rank_one_projection(&f.v, &f.w).expect("gain checked"))
                    .collect()
            };
            let label = if second_order {
                "second-order"
            } else {
                "first-order"
            };
            match spectral_word_screen(&projections, max_word_len) {
                Some(w) => {
                    let _ = writeln!(out, "{label} projection products: {w}");
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{label} projection products: no spectral radius above 1 up to length {max_word_len}"
                    );
                }
            }
            match defective_sum_screen(&mats) {
                Some(w) => {
                    let _ = writeln!(out, "{label} matrix sums: {w}");
                }
                None => {
                    let _ = writeln!(out, "{label} matrix sums: no defective sum of at most two");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            file,
            rates,
            totals,
            t_end,
            dt,
            x0,
            delta0,
            independent,
            csv,
        } => {
            let net = load(&file)?;
            let (_, rs) = prepare(&net, independent.as_deref())?;
            let params =
                MassActionParams::parse(&read(&rates)?, net.num_reactions(), rs.conserved, totals)?;
            let model = MassActionModel::new(&net, &rs, params)?;
            let x0 = x0.unwrap_or_else(|| vec![0.0; model.reduced_dim()]);
            let delta0 = delta0.unwrap_or_else(|| vec![1.0; model.compound_dim()]);
            let compounds: Vec<RatMatrix> =
                rank_one_matrices(&rs).iter().map(second_compound).collect();
            let v = if compounds.is_empty() {
                None
            } else {
                algorithm1(&compounds, DEFAULT_MAX_ITER).ok()
            };
            let traj = model.integrate(&x0, &delta0, t_end, dt, v.as_ref())?;
            if traj.clamped {
                eprintln!("warning: negative concentrations were clamped during integration");
            }
            if let Some(path) = &csv {
                let mut buf = Vec::new();
                traj.write_csv(&mut buf).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                write_file(path, &buf)?;
            }
            let fmt = |v: &[f64]| {
                v.iter()
                    .map(|x| format!("{x:.9}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let _ = writeln!(out, "t = {}", traj.t.last().copied().unwrap_or(0.0));
            let _ = writeln!(out, "x = [{}]", fmt(traj.final_state()));
            let _ = writeln!(out, "delta2 = [{}]", fmt(traj.final_delta()));
            if let (Some(v), Some(f)) = (&traj.v, &v) {
                let _ = writeln!(
                    out,
                    "V = {:e} (V(0) = {:e}; {})",
                    v[v.len() - 1],
                    v[0],
                    f.describe()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
