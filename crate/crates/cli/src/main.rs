use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dictcs::bounds::{self, BoundsError};
use dictcs::dictionary::{
    babel_curve, coherence, coherence_lower_bound, restricted_isometry_exact, restricted_isometry_sampled,
    Dictionary, DictionaryError, IsometryReport,
};
use dictcs::experiments::{
    export_csv, grid_to_csv, run_phase_transition_with_workers, CoeffModel, DictionarySource, ExperimentConfig,
    ExperimentError, MatrixMode,
};
use dictcs::measurement::{
    concentration_bound, empirical_ip_concentration, empirical_norm_concentration, gaussian_concentration_bound,
    inner_product_tail_bound, EnsembleKind, EnsembleSpec, MeasurementError,
};
use dictcs::recovery::{bp_error_bound, Algorithm, BpOptions, RecoveryError, SparseSignal};
use dictcs::{DenseMatrix, RngStream};

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<DictionaryError> for CliError {
    fn from(e: DictionaryError) -> Self {
        match e {
            DictionaryError::Numerics(_) => Self::numerical(e.to_string()),
            _ => Self::invalid(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Dictionary(d) => d.into(),
            ExperimentError::InvalidConfig(_) | ExperimentError::OutOfRange(_) => Self::invalid(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<MeasurementError> for CliError {
    fn from(e: MeasurementError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::NotRecoverable { .. } => Self::numerical(e.to_string()),
            _ => Self::invalid(e.to_string()),
        }
    }
}

impl From<RecoveryError> for CliError {
    fn from(e: RecoveryError) -> Self {
        match e {
            RecoveryError::InvalidInput(_) | RecoveryError::DimensionMismatch { .. } => Self::invalid(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

/// Sparse recovery in redundant dictionaries from random measurements.
#[derive(Debug, Parser)]
#[command(name = "dictcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recovery-rate grid over (n, S) written as CSV.
    Phase(PhaseArgs),
    /// Restricted isometry constant of a dictionary, optionally composed with a random matrix.
    Ric(RicArgs),
    /// Coherence and Babel function of a dictionary.
    Coherence(CoherenceArgs),
    /// Closed-form bounds.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Monte-Carlo check of a concentration inequality.
    Concentration(ConcentrationArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Gaussian,
    Bernoulli,
}

impl From<EnsembleArg> for EnsembleKind {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Gaussian => EnsembleKind::Gaussian,
            EnsembleArg::Bernoulli => EnsembleKind::Bernoulli,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    Bp,
    Omp,
    Thresh,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Bp => Algorithm::BasisPursuit,
            AlgoArg::Omp => Algorithm::Omp,
            AlgoArg::Thresh => Algorithm::Thresholding,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CoeffArg {
    Gaussian,
    UnitSign,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatrixModeArg {
    Fixed,
    Fresh,
}

#[derive(Debug, Args)]
struct DictArgs {
    /// `dirac`, `dirac-dct`, or a CSV file with one row per signal coordinate.
    #[arg(long = "dict", default_value = "dirac-dct")]
    dict: String,
    /// Signal dimension for the built-in dictionaries.
    #[arg(long, default_value_t = 256)]
    d: usize,
}

impl DictArgs {
    fn source(&self) -> DictionarySource {
        DictionarySource::parse(&self.dict)
    }

    fn load(&self) -> Result<Dictionary, CliError> {
        let dict = match self.source() {
            DictionarySource::File(p) => dictcs::dictionary::load_dictionary(p)?,
            source => source.build(self.d)?,
        };
        for w in dict.warnings() {
            log::warn!("{w}");
        }
        Ok(dict)
    }
}

#[derive(Debug, Clone)]
struct List(Vec<usize>);

fn parse_list(text: &str) -> Result<List, String> {
    parse_values(text).map(List)
}

/// Parses `a,b,c` or `start:end:step` (inclusive).
fn parse_values(text: &str) -> Result<Vec<usize>, String> {
    if let Some((range, step)) = text.rsplit_once(':').and_then(|(head, step)| {
        head.split_once(':').map(|(a, b)| ((a.to_string(), b.to_string()), step.to_string()))
    }) {
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
        let (start, end, step) = (parse(&range.0)?, parse(&range.1)?, parse(&step)?);
        if step == 0 {
            return Err("step must be positive".into());
        }
        return Ok((start..=end).step_by(step).collect());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[command(flatten)]
    dict: DictArgs,
    #[arg(long, value_enum, default_value = "gaussian")]
    ensemble: EnsembleArg,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Measurement counts, `64,96,128` or `64:224:32`.
    #[arg(long, value_parser = parse_list)]
    n: List,
    /// Sparsity levels, same syntax as `--n`.
    #[arg(long, value_parser = parse_list)]
    s: List,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "fixed")]
    matrix_mode: MatrixModeArg,
    /// Coefficient model; Gaussian for bp/omp and unit-sign for thresh by default.
    #[arg(long, value_enum)]
    coeff: Option<CoeffArg>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    workers: Option<usize>,
    /// Write zero runtimes so that outputs of repeated runs compare equal.
    #[arg(long)]
    no_timing: bool,
}

fn run_phase(args: PhaseArgs) -> Result<(), CliError> {
    let algorithm = Algorithm::from(args.algo);
    let n_list = args.n.0;
    let s_list = args.s.0;
    if n_list.is_empty() || s_list.is_empty() {
        return Err(CliError::invalid("--n and --s must each list at least one value"));
    }
    let config = ExperimentConfig {
        d: args.dict.d,
        dictionary: args.dict.source(),
        ensemble: args.ensemble.into(),
        n_list,
        s_list,
        trials: args.trials,
        coeff_model: match args.coeff {
            Some(CoeffArg::Gaussian) => CoeffModel::Gaussian,
            Some(CoeffArg::UnitSign) => CoeffModel::UnitSign,
            None => CoeffModel::default_for(algorithm),
        },
        algorithm,
        seed: args.seed,
        bp_options: BpOptions::default(),
        matrix_mode: match args.matrix_mode {
            MatrixModeArg::Fixed => MatrixMode::Fixed,
            MatrixModeArg::Fresh => MatrixMode::Fresh,
        },
    };
    let config = match &config.dictionary {
        DictionarySource::File(p) => ExperimentConfig {
            d: dictcs::dictionary::load_dictionary(p)?.dim(),
            ..config
        },
        _ => config,
    };
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    log::info!("config digest {}", config.digest());
    let grid = run_phase_transition_with_workers(&config, workers)?;
    let grid = if args.no_timing { grid.without_timing() } else { grid };
    match args.out {
        Some(path) => export_csv(&grid, &path).map_err(|e| CliError::numerical(e.to_string()))?,
        None => print!("{}", grid_to_csv(&grid)),
    }
    Ok(())
}

#[derive(Debug, Args)]
struct RicArgs {
    #[command(flatten)]
    dict: DictArgs,
    /// Sparsity.
    #[arg(long)]
    s: usize,
    /// Largest number of supports to enumerate exactly.
    #[arg(long, conflicts_with = "samples")]
    exact_limit: Option<u128>,
    /// Estimate from this many random supports instead of enumerating.
    #[arg(long)]
    samples: Option<usize>,
    /// Also report the constant of A·D for a random A.
    #[arg(long)]
    with_measurement: bool,
    #[arg(long, requires = "with_measurement")]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "gaussian")]
    ensemble: EnsembleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn isometry(m: &DenseMatrix, args: &RicArgs, rng: &mut RngStream) -> Result<IsometryReport, CliError> {
    Ok(match args.samples {
        Some(samples) => restricted_isometry_sampled(m, args.s, samples, rng)?,
        None => restricted_isometry_exact(
            m,
            args.s,
            args.exact_limit
                .unwrap_or(dictcs::dictionary::DEFAULT_ENUMERATION_LIMIT),
        )?,
    })
}

fn print_report(label: &str, r: &IsometryReport) {
    println!("{label}.delta = {}", r.delta);
    println!("{label}.method = {:?}", r.method);
    println!("{label}.supports = {}", r.supports_evaluated);
    println!("{label}.note = {}", r.confidence_note);
}

fn run_ric(args: RicArgs) -> Result<(), CliError> {
    let dict = args.dict.load()?;
    let mut rng = RngStream::new(args.seed).child(&[0]);
    let report = isometry(dict.matrix(), &args, &mut rng)?;
    println!("S = {}", args.s);
    print_report("dictionary", &report);
    if args.with_measurement {
        let n = args
            .n
            .ok_or_else(|| CliError::invalid("--with-measurement needs --n"))?;
        let spec = EnsembleSpec::new(EnsembleKind::from(args.ensemble), n, dict.dim(), RngStream::new(args.seed))?;
        let phi = dictcs::measurement::draw(&spec)
            .matmul(dict.matrix())
            .map_err(|e| CliError::numerical(e.to_string()))?;
        let composed = isometry(&phi, &args, &mut rng)?;
        print_report("composed", &composed);
    }
    Ok(())
}

#[derive(Debug, Args)]
struct CoherenceArgs {
    #[command(flatten)]
    dict: DictArgs,
    /// Largest k for which the Babel function is printed.
    #[arg(long, default_value_t = 8)]
    max_k: usize,
}

fn run_coherence(args: CoherenceArgs) -> Result<(), CliError> {
    let dict = args.dict.load()?;
    println!("d = {}", dict.dim());
    println!("K = {}", dict.atoms());
    println!("mu = {}", coherence(&dict)?);
    if dict.atoms() > dict.dim() {
        println!("mu_lower_bound = {}", coherence_lower_bound(dict.dim(), dict.atoms())?);
    }
    for (k, v) in babel_curve(&dict, args.max_k.min(dict.atoms() - 1)).iter().enumerate() {
        println!("mu1({}) = {v}", k + 1);
    }
    Ok(())
}

#[derive(Debug, Subcommand)]
enum BoundsCommand {
    /// Samples for the composed isometry constant (union-bound form).
    BpSamples {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = dictcs::measurement::DEFAULT_CONCENTRATION_C)]
        c: f64,
        /// Use S·log(e(1 + 12/δ)) + log 2 in place of log(2e(1 + 12/δ)).
        #[arg(long)]
        strict: bool,
    },
    /// Samples for δ_S(A·D) ≤ 1/3 on dictionaries with small coherence.
    CorollarySamples {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = dictcs::measurement::DEFAULT_CONCENTRATION_C)]
        c: f64,
        /// Coherence, to check S − 1 ≤ 1/(16μ).
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Samples for thresholding with correlation margin ε.
    ThreshSamples {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Samples for thresholding from coefficient magnitudes and Babel values.
    ThreshCoherent {
        /// Nonzero coefficients of the signal.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Vec<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        mu1_s: f64,
        #[arg(long)]
        mu1_sm1: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Tail and failure probabilities.
    Tail {
        #[arg(long, value_enum)]
        kind: TailKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = dictcs::measurement::DEFAULT_CONCENTRATION_C)]
        c: f64,
        /// ε for concentration bounds, t for the inner-product bound, x for Bernstein.
        #[arg(long)]
        param: Option<f64>,
        /// Variance proxy for the Bernstein bound.
        #[arg(long)]
        v: Option<f64>,
        /// Moment scale for the Bernstein bound.
        #[arg(long)]
        m: Option<f64>,
    },
    /// δ_S(D) + δ(1 + δ_S(D)).
    ComposedRic {
        #[arg(long)]
        delta_dict: f64,
        #[arg(long)]
        delta: f64,
    },
    /// δ_3S + 3δ_4S < 2 and, when δ_4S ≤ 1/3, the noisy error bound.
    BpCondition {
        #[arg(long)]
        delta3s: f64,
        #[arg(long)]
        delta4s: f64,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// √((K − d)/(d(K − 1))).
    CoherenceLower {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TailKind {
    /// Isometry failure on one support.
    Local,
    /// Union bound over all supports.
    Global,
    /// Norm concentration, generic constant c.
    Conc,
    /// Norm concentration, Gaussian ensemble.
    GaussianConc,
    /// Inner-product deviation.
    Ip,
    /// Bernstein tail.
    Bernstein,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::invalid(format!("missing --{flag}")))
}

fn run_bounds(cmd: BoundsCommand) -> Result<(), CliError> {
    match cmd {
        BoundsCommand::BpSamples {
            s,
            k,
            delta,
            t,
            c,
            strict,
        } => {
            let (real, count) = if strict {
                (
                    bounds::sample_bound_bp_strict_real(s, k, delta, t, c)?,
                    bounds::sample_bound_bp_strict(s, k, delta, t, c)?,
                )
            } else {
                (
                    bounds::sample_bound_bp_real(s, k, delta, t, c)?,
                    bounds::sample_bound_bp(s, k, delta, t, c)?,
                )
            };
            println!("n_real = {real}");
            println!("n = {count}");
        }
        BoundsCommand::CorollarySamples { s, k, t, c, mu } => {
            let (c1, c2) = bounds::corollary_constants(c);
            println!("C1 = {c1}");
            println!("C2 = {c2}");
            if let Some(mu) = mu {
                println!("sparsity_condition = {}", bounds::corollary_sparsity_condition(s, mu));
            }
            println!("n_real = {}", bounds::sample_bound_corollary_real(s, k, t, c)?);
            println!("n = {}", bounds::sample_bound_corollary(s, k, t, c)?);
        }
        BoundsCommand::ThreshSamples { eps, k, t } => {
            println!("C_eps = {}", bounds::thresholding_constant(eps)?);
            println!("n_real = {}", bounds::thresholding_sample_bound_real(eps, k, t)?);
            println!("n = {}", bounds::thresholding_sample_bound(eps, k, t)?);
        }
        BoundsCommand::ThreshCoherent {
            coeffs,
            k,
            mu1_s,
            mu1_sm1,
            t,
        } => {
            if coeffs.len() > k {
                return Err(CliError::invalid("more coefficients than atoms"));
            }
            let x = SparseSignal::new(k, (0..coeffs.len()).collect(), coeffs)?;
            println!(
                "recovery_condition = {}",
                bounds::thresholding_recovery_condition(&x, mu1_s, mu1_sm1)
            );
            println!(
                "n_real = {}",
                bounds::thresholding_sample_bound_coherent_real(&x, mu1_s, mu1_sm1, t)?
            );
            println!("n = {}", bounds::thresholding_sample_bound_coherent(&x, mu1_s, mu1_sm1, t)?);
        }
        BoundsCommand::Tail {
            kind,
            n,
            s,
            k,
            delta,
            c,
            param,
            v,
            m,
        } => {
            let value = match kind {
                TailKind::Local => bounds::local_iso_failure_prob(need(s, "s")?, need(delta, "delta")?, need(n, "n")?, c)?,
                TailKind::Global => bounds::global_ric_failure_prob(
                    need(s, "s")?,
                    need(k, "k")?,
                    need(delta, "delta")?,
                    need(n, "n")?,
                    c,
                )?,
                TailKind::Conc => concentration_bound(need(param, "param")?, need(n, "n")?, c)?,
                TailKind::GaussianConc => gaussian_concentration_bound(need(param, "param")?, need(n, "n")?)?,
                TailKind::Ip => inner_product_tail_bound(need(param, "param")?, need(n, "n")?),
                TailKind::Bernstein => bounds::bennett_tail(need(param, "param")?, need(v, "v")?, need(m, "m")?)?,
            };
            println!("bound = {value}");
        }
        BoundsCommand::ComposedRic { delta_dict, delta } => {
            println!("delta_composed = {}", bounds::composed_ric_bound(delta_dict, delta));
        }
        BoundsCommand::BpCondition { delta3s, delta4s, eta } => {
            println!("condition = {}", bounds::bp_ric_condition(delta3s, delta4s));
            if let Some(eta) = eta {
                match bp_error_bound(delta4s, eta) {
                    Ok(b) => println!("error_bound = {b}"),
                    Err(RecoveryError::NotApplicable(msg)) => println!("error_bound = n/a ({msg})"),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        BoundsCommand::CoherenceLower { d, k } => {
            println!("mu_lower_bound = {}", coherence_lower_bound(d, k)?);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConcentrationMode {
    Norm,
    Ip,
}

#[derive(Debug, Args)]
struct ConcentrationArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    ensemble: EnsembleArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, value_enum, default_value = "norm")]
    mode: ConcentrationMode,
    /// ε for the norm event, t for the inner-product event.
    #[arg(long)]
    param: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn unit_vector(rng: &mut RngStream, d: usize) -> Vec<f64> {
    let v = rng.gaussian_vec(d);
    let norm = dictcs::numerics::norm2(&v);
    v.into_iter().map(|x| x / norm).collect()
}

fn run_concentration(args: ConcentrationArgs) -> Result<(), CliError> {
    let spec = EnsembleSpec::new(
        EnsembleKind::from(args.ensemble),
        args.n,
        args.d,
        RngStream::new(args.seed),
    )?;
    let mut rng = RngStream::new(args.seed).child(&[u64::MAX]);
    let report = match args.mode {
        ConcentrationMode::Norm => {
            let v = unit_vector(&mut rng, args.d);
            empirical_norm_concentration(&spec, &v, args.param, args.trials)?
        }
        ConcentrationMode::Ip => {
            let x = unit_vector(&mut rng, args.d);
            let y = unit_vector(&mut rng, args.d);
            empirical_ip_concentration(&spec, &x, &y, args.param, args.trials)?
        }
    };
    println!("param = {}", report.parameter);
    println!("n = {}", report.n);
    println!("trials = {}", report.trials);
    println!("events = {}", report.events);
    println!("empirical = {}", report.empirical_frequency);
    println!("bound = {}", report.theoretical_bound);
    println!("slack = {}", report.slack);
    println!("satisfied = {}", report.satisfied);
    if !report.satisfied {
        return Err(CliError::numerical("empirical frequency exceeds the bound plus slack"));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phase(a) => run_phase(a),
        Command::Ric(a) => run_ric(a),
        Command::Coherence(a) => run_coherence(a),
        Command::Bounds(c) => run_bounds(c),
        Command::Concentration(a) => run_concentration(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
