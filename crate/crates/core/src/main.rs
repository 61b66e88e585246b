use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multisym::bench::{bench_csv, run_bench, BenchConfig};
use multisym::centro::centro_residual;
use multisym::eri::{
    eri_matrix, random_basis, rank_profile, BasisConfig, EriMatrixOracle, GaussianBasis,
    ProfileSource,
};
use multisym::format::{
    header_token, read_basis, read_matrix, read_packed, read_rep, read_tensor, write_basis,
    write_kron_terms, write_matrix, write_rank_csv, write_rep,
};
use multisym::index::{
    one_sided_shuffle_residual, shuffle_invariance_residual, DEFAULT_STRUCTURE_TOL,
};
use multisym::pschol::DEFAULT_DELTA;
use multisym::psym::{
    ps_factor, ps_reconstruct, rep_to_kron_terms_truncated, structured_schur, Engine,
    PsFactorOptions, Source,
};
use multisym::tensor4::{multilinear_product_structured, unfold_12_34, unpack};
use multisym::{DenseMatrix, Error, Result};

#[derive(Parser)]
#[command(
    name = "multisym",
    version,
    about = "Structured factorizations of multiply symmetric matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random s-type Gaussian basis.
    GenEri(GenEriArgs),
    /// Structured pivoted Cholesky of a PS-symmetric matrix or an ERI basis.
    Factor(FactorArgs),
    /// Rebuild a (possibly truncated) matrix from a representation.
    Approx(ApproxArgs),
    /// Four-index transform of a representation without skew part.
    Transform(TransformArgs),
    /// Numerical ranks for thresholds 10^-p, or eigenvalue magnitudes.
    RankProfile(RankProfileArgs),
    /// Counter-based comparison table.
    Bench(BenchArgs),
    /// Report which symmetry classes a matrix or tensor belongs to.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenEriArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    box_size: f64,
    #[arg(long, default_value_t = 0.2)]
    exp_min: f64,
    #[arg(long, default_value_t = 5.0)]
    exp_max: f64,
    /// Also write the n²×n² matrix of integrals.
    #[arg(long)]
    materialize: Option<PathBuf>,
}

#[derive(Args)]
struct FactorArgs {
    /// Matrix file or basis file.
    #[arg(long)]
    input: PathBuf,
    /// Representation output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Evaluate only the block entries the pivots touch.
    #[arg(long, conflicts_with = "dense")]
    lazy: bool,
    /// Form the blocks in full before factoring (the default).
    #[arg(long)]
    dense: bool,
    /// Treat the input as ((1,2),(3,4))-symmetric and skip the skew block.
    #[arg(long)]
    skip_skew: bool,
    #[arg(long)]
    max_rank: Option<usize>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    rep: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the full sym rank.
    #[arg(long)]
    r_sym: Option<usize>,
    /// Defaults to the full skew rank.
    #[arg(long)]
    r_skew: Option<usize>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    rep: PathBuf,
    /// Square transform matrix.
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of terms to use; defaults to all.
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Args)]
struct RankProfileArgs {
    /// Matrix file or basis file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10")]
    p: Vec<u32>,
    /// Emit eigenvalue magnitudes of a PS-symmetric matrix instead.
    #[arg(long)]
    eigen: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,8,16,24")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Threshold of the evaluation comparison.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Matrix, tensor4 or packed4 file.
    #[arg(long)]
    input: PathBuf,
    /// Relative tolerance (scaled by the largest entry).
    #[arg(long, default_value_t = DEFAULT_STRUCTURE_TOL)]
    tol: f64,
    /// Fail (exit 1) unless the input is in this class; repeatable.
    #[arg(long, value_parser = ["symmetric", "ps-symmetric", "1234-symmetric", "centrosymmetric"])]
    require: Vec<String>,
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

/// `n` with `n² = rows`, checked against an explicit `--n`.
fn mode_size(a: &DenseMatrix, n: Option<usize>) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    let root = (a.rows() as f64).sqrt().round() as usize;
    match n {
        Some(n) if n * n == a.rows() => Ok(n),
        Some(n) => Err(Error::DimensionMismatch(format!(
            "--n {n} does not match a {0}x{0} matrix",
            a.rows()
        ))),
        None if root * root == a.rows() => Ok(root),
        None => Err(Error::DimensionMismatch(format!(
            "order {} is not a perfect square",
            a.rows()
        ))),
    }
}

enum Problem {
    Basis(GaussianBasis),
    Matrix(DenseMatrix),
}

fn read_problem(path: &Path) -> Result<Problem> {
    let text = read_text(path)?;
    if header_token(&text) == Some("gbasis") {
        Ok(Problem::Basis(read_basis(&text)?))
    } else {
        Ok(Problem::Matrix(read_matrix(&text)?))
    }
}

fn gen_eri(args: &GenEriArgs) -> Result<()> {
    positive("box-size", args.box_size)?;
    let cfg = BasisConfig {
        box_size: args.box_size,
        exponent_range: (args.exp_min, args.exp_max),
    };
    let basis = random_basis(args.n, args.seed, &cfg)?;
    write_text(&args.out, &write_basis(&basis))?;
    if let Some(path) = &args.materialize {
        write_text(path, &write_matrix(&eri_matrix(&basis)))?;
    }
    Ok(())
}

fn factor(args: &FactorArgs) -> Result<()> {
    positive("delta", args.delta)?;
    if args.threads == 0 {
        return Err(Error::InvalidArgument(
            "--threads must be at least 1".into(),
        ));
    }
    let opts = PsFactorOptions {
        delta: args.delta,
        skip_skew: args.skip_skew,
        engine: if args.lazy {
            Engine::Lazy
        } else {
            Engine::Dense
        },
        max_rank: args.max_rank,
        threads: args.threads,
    };
    let rep = match read_problem(&args.input)? {
        Problem::Matrix(a) => {
            let n = mode_size(&a, args.n)?;
            ps_factor(Source::Dense(&a), n, &opts)?
        }
        Problem::Basis(b) => {
            if args.n.is_some_and(|n| n != b.n()) {
                return Err(Error::DimensionMismatch(format!(
                    "--n does not match basis size {}",
                    b.n()
                )));
            }
            let oracle = EriMatrixOracle::new(&b);
            ps_factor(Source::Oracle(&oracle), b.n(), &opts)?
        }
    };
    if let Some(path) = &args.out {
        write_text(path, &write_rep(&rep))?;
    }
    let c = rep.counters;
    println!(
        "rank_sym={} rank_skew={} flops={} evals={} setup_entries={}",
        rep.r_sym(),
        rep.r_skew(),
        c.total_flops(),
        c.evals,
        c.setup_entries
    );
    Ok(())
}

fn approx(args: &ApproxArgs) -> Result<()> {
    let rep = read_rep(&read_text(&args.rep)?)?;
    let a = ps_reconstruct(
        &rep,
        args.r_sym.unwrap_or(rep.r_sym()),
        args.r_skew.unwrap_or(rep.r_skew()),
    )?;
    write_text(&args.out, &write_matrix(&a))
}

fn transform(args: &TransformArgs) -> Result<()> {
    let rep = read_rep(&read_text(&args.rep)?)?;
    let x = read_matrix(&read_text(&args.x)?)?;
    if x.rows() != rep.n || x.cols() != rep.n {
        return Err(Error::DimensionMismatch(format!(
            "transform is {}x{}, representation has n = {}",
            x.rows(),
            x.cols(),
            rep.n
        )));
    }
    let terms = rep_to_kron_terms_truncated(&rep, args.r.unwrap_or(rep.r_sym()))?;
    let (d, flops) = multilinear_product_structured(&terms, &x)?;
    write_text(&args.out, &write_kron_terms(&d, rep.n))?;
    println!("terms={} n={} flops={flops}", d.len(), rep.n);
    Ok(())
}

fn rank_profile_cmd(args: &RankProfileArgs) -> Result<()> {
    let problem = read_problem(&args.input)?;
    let csv = if args.eigen {
        let (a, n) = match problem {
            Problem::Matrix(a) => {
                let n = mode_size(&a, args.n)?;
                (a, n)
            }
            Problem::Basis(b) => (eri_matrix(&b), b.n()),
        };
        let eig = structured_schur(&a, n)?;
        let mut mags: Vec<f64> = eig.all_values().iter().map(|v| v.abs()).collect();
        mags.sort_by(|x, y| y.total_cmp(x));
        let mut out = String::from("k,magnitude\n");
        for (k, m) in mags.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k + 1, multisym::format::fmt_f64(*m)));
        }
        out
    } else {
        let rows = match &problem {
            Problem::Matrix(a) => rank_profile(&ProfileSource::Matrix(a), &args.p)?,
            Problem::Basis(b) => rank_profile(&ProfileSource::Basis(b), &args.p)?,
        };
        write_rank_csv(&rows)
    };
    emit(args.out.as_deref(), &csv)
}

fn bench(args: &BenchArgs) -> Result<()> {
    positive("delta", args.delta)?;
    let cfg = BenchConfig {
        sizes: args.sizes.clone(),
        seed: args.seed,
        delta: args.delta,
        basis: BasisConfig::default(),
    };
    emit(args.out.as_deref(), &bench_csv(&run_bench(&cfg)?))
}

/// Returns whether every `--require`d class passed.
fn verify(args: &VerifyArgs) -> Result<bool> {
    let text = read_text(&args.input)?;
    let a = match header_token(&text) {
        Some("tensor4") => unfold_12_34(&read_tensor(&text)?),
        Some("packed4") => unfold_12_34(&unpack(&read_packed(&text)?)?),
        _ => read_matrix(&text)?,
    };
    if !a.is_finite() {
        return Err(Error::Parse("input contains non-finite values".into()));
    }
    let scale = args.tol * a.max_abs();
    let sym = if a.is_square() {
        Some(a.symmetry_residual())
    } else {
        None
    };
    let n = mode_size(&a, None).ok();
    let ps = match (sym, n) {
        (Some(s), Some(n)) => Some(s.max(shuffle_invariance_residual(&a, n)?)),
        _ => None,
    };
    let one = match (sym, n) {
        (Some(s), Some(n)) => Some(s.max(one_sided_shuffle_residual(&a, n)?)),
        _ => None,
    };
    let centro = if a.is_square() {
        Some(centro_residual(&a)?)
    } else {
        None
    };

    let mut ok = true;
    for (name, residual) in [
        ("symmetric", sym),
        ("ps-symmetric", ps),
        ("1234-symmetric", one),
        ("centrosymmetric", centro),
    ] {
        let pass = residual.is_some_and(|r| r <= scale);
        match residual {
            Some(r) => println!(
                "{name}: {} residual={r:e}",
                if pass { "pass" } else { "fail" }
            ),
            None => println!("{name}: fail (shape {}x{})", a.rows(), a.cols()),
        }
        if !pass && args.require.iter().any(|c| c == name) {
            ok = false;
        }
    }
    Ok(ok)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::GenEri(a) => gen_eri(a).map(|_| true),
        Command::Factor(a) => factor(a).map(|_| true),
        Command::Approx(a) => approx(a).map(|_| true),
        Command::Transform(a) => transform(a).map(|_| true),
        Command::RankProfile(a) => rank_profile_cmd(a).map(|_| true),
        Command::Bench(a) => bench(a).map(|_| true),
        Command::Verify(a) => verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
