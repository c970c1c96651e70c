//! `borchers` — batch front end for the desk-scale laboratory.
//!
//! Subcommands: `gns` (state + generators → GNS report JSON), `ym2`
//! (partition function / two-point CSV), `mm` (matrix-model Monte-Carlo
//! moment CSV), `check` (axiom checks → consolidated JSON).
//!
//! Exit codes: 0 success (and, for `check`, every requested check
//! passed); 2 the state failed positivity or a requested check; 1 I/O,
//! parse, or usage errors.
//!
//! Seeds resolve as flag > `BORCHERS_SEED` environment variable > spec
//! file > 0.  Every output embeds `config_hash`, the SHA-256 of the
//! resolved command line plus the raw bytes of every input file, so a
//! result can always be traced to its exact inputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use serde_json::json;
use sha2::{Digest, Sha256};

use borchers_core::algebra::MatrixTestFunction;
use borchers_core::gns::{gns_construct, WordBasis};
use borchers_core::io::{
    moment_table_to_csv, GeneratorsDto, GnsReportDto, MatrixModelSpecDto, StateDto,
};
use borchers_core::matrix_model::mc_moments;
use borchers_core::states::checks::{
    check_hssc, check_krein, check_locality, check_positivity, check_translation_invariance,
    AlphaMap, SeminormKind, SeminormSpec,
};
use borchers_core::ym2::{
    color_m, color_p, gauge_invariant_two_point, partition_function, two_point_xi, SurfaceParams,
};
use borchers_core::{Error, SampledSpace, StateFunctional};

const SEED_ENV: &str = "BORCHERS_SEED";

#[derive(Parser)]
#[command(
    name = "borchers",
    version,
    about = "Desk-scale laboratory: GNS reconstruction, 2D Yang-Mills, matrix models",
    long_about = "Batch front end for the borchers-core laboratory.\n\n\
        Exit codes: 0 success / all checks passed, 2 positivity or check \
        failure, 1 I/O, parse, or usage error.\n\
        Seed precedence: --seed flag > BORCHERS_SEED environment variable > \
        spec file.\n\
        Every output embeds config_hash = SHA-256(resolved command line + \
        input file bytes)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the GNS construction and print a JSON report.
    Gns {
        /// State specification (JSON: kind, space, k, data).
        state: PathBuf,
        /// Generator family (JSON: k, generators).
        generators: PathBuf,
        /// Longest generator word spanning the dense domain.
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        /// Relative null threshold for the Gram quotient.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heat-kernel partition function (and optional two-point row) as CSV.
    Ym2 {
        /// Genus of the closed surface.
        #[arg(long)]
        genus: usize,
        /// Gauge group SU(N).
        #[arg(long = "N")]
        n: usize,
        /// Area-coupling combination τ = e²A/2 (--epsilon is an alias: ε ≡ τ).
        #[arg(long, visible_alias = "epsilon")]
        tau: f64,
        /// Largest total box count kept in the irrep sum.
        #[arg(long)]
        cutoff: i64,
        /// Append a field-strength two-point row: colors a b (1-based) and
        /// insertion points x y on a synthesized unit-weight grid.  The row
        /// echoes the exact p^{ab}, m^{ab} coefficients as p/q rationals.
        #[arg(long, num_args = 4, value_names = ["A", "B", "X", "Y"])]
        two_point: Option<Vec<usize>>,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo moment estimation for a Hermitian one-matrix model.
    Mm {
        /// Model spec (JSON: {"N": .., "couplings": {"2": -0.5}, "seed": ..}).
        spec: PathBuf,
        /// Entry lists to estimate (JSON: [[[i,j],[k,l]], ...], degree 2).
        #[arg(long)]
        moments: PathBuf,
        /// Measured sweeps after warmup (50 batches for error bars).
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Master seed override (beats BORCHERS_SEED and the spec file).
        #[arg(long)]
        seed: Option<u64>,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run axiom checks against a state and print a consolidated report.
    Check {
        /// State specification (JSON: kind, space, k, data).
        state: PathBuf,
        /// Run every check (translation is skipped on aperiodic spaces).
        #[arg(long)]
        all: bool,
        /// Gram positivity over identity-delta generator words.
        #[arg(long)]
        positivity: bool,
        /// Commutators of disjointly supported deltas vanish under ω.
        #[arg(long)]
        locality: bool,
        /// Hilbert-space structure condition with weighted-L² seminorms.
        #[arg(long)]
        hssc: bool,
        /// Krein conditions for the identity metric operator α.
        #[arg(long)]
        krein: bool,
        /// Translation invariance by one lattice spacing (periodic axes).
        #[arg(long)]
        translation: bool,
        /// Word length for the positivity Gram basis.
        #[arg(long, default_value_t = 1)]
        max_len: usize,
        /// Tolerance shared by all requested checks.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Anything that ends the run without a result, tagged for the exit code.
enum Failure {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Parse(PathBuf, String),
    Core(Error),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::NonPositiveState { .. }) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::Io(path, e) => write!(f, "cannot read {}: {e}", path.display()),
            Failure::Parse(path, e) => write!(f, "cannot parse {}: {e}", path.display()),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit(); // help/version leave with code 0
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(2),
        Err(failure) => {
            eprintln!("error: {failure}");
            std::process::exit(failure.exit_code());
        }
    }
}

/// Dispatches a parsed command; `Ok(false)` means the run produced its
/// report but a requested check failed.
fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Gns {
            state,
            generators,
            max_len,
            tol,
            out,
        } => cmd_gns(&state, &generators, max_len, tol, out.as_deref()),
        Command::Ym2 {
            genus,
            n,
            tau,
            cutoff,
            two_point,
            out,
        } => cmd_ym2(genus, n, tau, cutoff, two_point.as_deref(), out.as_deref()),
        Command::Mm {
            spec,
            moments,
            samples,
            seed,
            out,
        } => cmd_mm(&spec, &moments, samples, seed, out.as_deref()),
        Command::Check {
            state,
            all,
            positivity,
            locality,
            hssc,
            krein,
            translation,
            max_len,
            tol,
            out,
        } => {
            let requested = CheckSet {
                positivity: positivity || all,
                locality: locality || all,
                hssc: hssc || all,
                krein: krein || all,
                translation: translation || all,
            };
            if !requested.any() {
                return Err(Failure::Usage(
                    "check needs --all or at least one of --positivity --locality \
                     --hssc --krein --translation"
                        .into(),
                ));
            }
            cmd_check(&state, requested, max_len, tol, out.as_deref())
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, Failure> {
    serde_json::from_slice(bytes).map_err(|e| Failure::Parse(path.to_path_buf(), e.to_string()))
}

/// SHA-256 over the resolved invocation summary and every input file.
fn config_hash(summary: &str, files: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(summary.as_bytes());
    for bytes in files {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Seed precedence: explicit flag, then BORCHERS_SEED, then the file.
fn seed_override(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| Failure::Usage(format!("{SEED_ENV}={text:?} is not a u64 seed: {e}"))),
        Err(_) => Ok(None),
    }
}

fn cmd_gns(
    state_path: &Path,
    gens_path: &Path,
    max_len: usize,
    tol: f64,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    let state_bytes = read_file(state_path)?;
    let gens_bytes = read_file(gens_path)?;
    let hash = config_hash(
        &format!("gns max_len={max_len} tol={tol}"),
        &[&state_bytes, &gens_bytes],
    );

    let omega = parse_json::<StateDto>(state_path, &state_bytes)?.build()?;
    let gens_dto: GeneratorsDto = parse_json(gens_path, &gens_bytes)?;
    if gens_dto.k != omega.k() {
        return Err(Failure::Core(Error::Invalid(format!(
            "generators have k = {} but the state has k = {}",
            gens_dto.k,
            omega.k()
        ))));
    }
    let gens = gens_dto.build(omega.space())?;
    let basis = WordBasis::new(gens, max_len)?;
    let rep = gns_construct(&omega, basis, tol)?;

    let mut report = GnsReportDto::from_rep(&rep);
    report.config_hash = Some(hash);
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Parse(state_path.to_path_buf(), e.to_string()))?;
    text.push('\n');
    write_output(out, &text)?;
    Ok(true)
}

fn rational(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn cmd_ym2(
    genus: usize,
    n: usize,
    tau: f64,
    cutoff: i64,
    two_point: Option<&[usize]>,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    let summary = format!(
        "ym2 genus={genus} N={n} tau={tau} cutoff={cutoff} two_point={two_point:?}"
    );
    let hash = config_hash(&summary, &[]);
    let params = SurfaceParams::from_tau(genus, tau, n, cutoff)?;
    let z = partition_function(&params)?;

    let mut text = format!("# config_hash = {hash}\n");
    text.push_str("genus,N,tau,cutoff,Z,tail\n");
    text.push_str(&format!(
        "{genus},{n},{tau},{cutoff},{},{:e}\n",
        z.value.re, z.tail_estimate
    ));

    if let Some(&[a, b, x, y]) = two_point {
        // Unit-weight grid just large enough for both insertion points, so
        // the grid delta in the contact term is [x=y] exactly.
        let m = x.max(y) + 1;
        let space = SampledSpace::new(
            (0..m).map(|i| vec![i as f64]).collect(),
            vec![1.0; m],
            vec![None],
        )?;
        let xi = two_point_xi(a, b, x, y, &space, &params)?;
        let invariant = gauge_invariant_two_point(&params, x, y, &space)?;
        text.push_str("a,b,x,y,p_ab,m_ab,xi,gauge_invariant\n");
        text.push_str(&format!(
            "{a},{b},{x},{y},{},{},{:e},{:e}\n",
            rational(color_p(n, a, b)?),
            rational(color_m(n, a, b)?),
            xi.re,
            invariant.re
        ));
    }
    write_output(out, &text)?;
    Ok(true)
}

fn cmd_mm(
    spec_path: &Path,
    moments_path: &Path,
    samples: usize,
    seed_flag: Option<u64>,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    let spec_bytes = read_file(spec_path)?;
    let moments_bytes = read_file(moments_path)?;
    let spec_dto: MatrixModelSpecDto = parse_json(spec_path, &spec_bytes)?;
    let lists: Vec<Vec<(usize, usize)>> = parse_json(moments_path, &moments_bytes)?;
    let spec = spec_dto.build(seed_override(seed_flag)?)?;
    let hash = config_hash(
        &format!("mm samples={samples} seed={}", spec.seed),
        &[&spec_bytes, &moments_bytes],
    );

    let table = mc_moments(&spec, &lists, samples)?;
    let mut text = format!("# config_hash = {hash}\n# seed = {}\n", spec.seed);
    text.push_str(&moment_table_to_csv(&table)?);
    write_output(out, &text)?;
    Ok(true)
}

struct CheckSet {
    positivity: bool,
    locality: bool,
    hssc: bool,
    krein: bool,
    translation: bool,
}

impl CheckSet {
    fn any(&self) -> bool {
        self.positivity || self.locality || self.hssc || self.krein || self.translation
    }
}

/// Identity-matrix delta at every grid point: the default generator family
/// every state kind accepts.
fn delta_generators(
    space: &Arc<SampledSpace>,
    k: usize,
) -> Result<Vec<MatrixTestFunction>, Error> {
    (0..space.len())
        .map(|i| {
            MatrixTestFunction::delta_at(
                Arc::clone(space),
                i,
                DMatrix::<Complex64>::identity(k, k),
            )
        })
        .collect()
}

fn cmd_check(
    state_path: &Path,
    requested: CheckSet,
    max_len: usize,
    tol: f64,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    let state_bytes = read_file(state_path)?;
    let hash = config_hash(&format!("check max_len={max_len} tol={tol}"), &[&state_bytes]);
    let omega: StateFunctional = parse_json::<StateDto>(state_path, &state_bytes)?.build()?;
    let space = Arc::clone(omega.space());
    let k = omega.k();

    let mut results = serde_json::Map::new();
    let mut all_passed = true;
    let mut record = |name: &str, value: serde_json::Value, passed: Option<bool>| {
        if let Some(p) = passed {
            all_passed &= p;
        }
        results.insert(name.to_string(), value);
    };

    if requested.positivity {
        let report = check_positivity(&omega, &delta_generators(&space, k)?, max_len, tol)?;
        let passed = report.passed;
        record("positivity", json!(report), Some(passed));
    }
    if requested.locality {
        let f = MatrixTestFunction::delta_at(
            Arc::clone(&space),
            0,
            DMatrix::<Complex64>::identity(k, k),
        )?;
        let g = MatrixTestFunction::delta_at(
            Arc::clone(&space),
            space.len() - 1,
            DMatrix::<Complex64>::identity(k, k),
        )?;
        let report = check_locality(&omega, &f, &g, &[], tol)?;
        let passed = report.passed;
        record("locality", json!(report), Some(passed));
    }
    if requested.hssc {
        let spec = SeminormSpec::uniform(SeminormKind::WeightedL2, 1.0, 2)?;
        let report = check_hssc(&omega, &spec, 60, tol.max(1e-9))?;
        let passed = report.passed;
        record("hssc", json!(report), Some(passed));
    }
    if requested.krein {
        let alpha = AlphaMap::identity(Arc::clone(&space), k);
        let report = check_krein(&omega, &alpha, 32, tol)?;
        let passed = report.passed;
        record("krein", json!(report), Some(passed));
    }
    if requested.translation && space.periodic().iter().all(Option::is_none) {
        record(
            "translation",
            json!({"skipped": "no periodic axis to translate along"}),
            None,
        );
    } else if requested.translation {
        // One lattice spacing per axis: period divided by the number of
        // distinct coordinates seen on that axis.
        let shift: Vec<f64> = (0..space.dim())
            .map(|axis| match space.periodic()[axis] {
                Some(period) => {
                    let mut coords: Vec<f64> =
                        (0..space.len()).map(|i| space.point(i)[axis]).collect();
                    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    coords.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                    period / coords.len() as f64
                }
                None => 0.0,
            })
            .collect();
        match check_translation_invariance(&omega, &delta_generators(&space, k)?, &[shift], tol)
        {
            Ok(report) => {
                let passed = report.passed;
                record("translation", json!(report), Some(passed));
            }
            Err(e @ (Error::NotPeriodic { .. } | Error::OffLattice(_))) => {
                record(
                    "translation",
                    json!({"skipped": e.to_string()}),
                    None,
                );
            }
            Err(e) => return Err(e.into()),
        }
    }

    let report = json!({
        "config_hash": hash,
        "state": omega.describe(),
        "tol": tol,
        "passed": all_passed,
        "checks": serde_json::Value::Object(results),
    });
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Parse(state_path.to_path_buf(), e.to_string()))?;
    text.push('\n');
    write_output(out, &text)?;
    Ok(all_passed)
}
