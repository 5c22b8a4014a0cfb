//! Argument parsing and the resolved run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use dephasing_core::{BlochVector, DensityMatrix, MixtureWeights};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Tolerance on `x1 + x2 + x3 = 1` for user-supplied weights.
pub const SIMPLEX_TOL: f64 = 1e-9;

const AFTER_HELP: &str = "\
Times and rates are in units of the dephasing rate: L_k[ρ] = σ_k ρ σ_k − ρ.

Defaults: --x 0.5,0.5,0  --t-max 5  --steps 100  --rho0 bloch:1,0,0  --seed 0
  --samples 100000 (area: 1000000, classify: 1000 state pairs, violate: 64 candidates)
  --resolution 50  --directions discrete  --format csv (area, violate: json)
  --method analytic (area: paper-quadrature, jump-sim: jump, compare --against: time-local)

Named initial states: zero, one, plus, minus, plus-i, minus-i, mixed.
`--out csv` and `--out json` select the format and write to stdout.";

#[derive(Debug, Parser)]
#[command(
    name = "dephasing",
    version,
    about = "Qubit dephasing in random directions: channels, rates, divisibility and simulations",
    after_help = AFTER_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Evolve an initial state with one realisation of the channel.
    Evolve(Flags),
    /// Time-local rates γ_k(t) and the exponents μ_k(t).
    Rates(Flags),
    /// CPT, CP-divisibility, P-divisibility and trace-distance monotonicity on a grid.
    Classify(Flags),
    /// Sign pattern of the rates over a barycentric grid of the triangle.
    Triangle(Flags),
    /// Fraction of the triangle that is not CP-divisible for all times.
    Area(Flags),
    /// Classical jump-process ensemble (or --method extended-jump).
    JumpSim(Flags),
    /// Reduced dynamics of the bipartite GKSL embedding.
    Embed(Flags),
    /// Search for a two-qubit trace-norm increase of Λ_{t,s} ⊗ id.
    Violate(Flags),
    /// Trace distance between two realisations on the same grid.
    Compare(Flags),
}

#[derive(Debug, Clone, clap::Args)]
struct Flags {
    /// Mixture weights `a,b` (third inferred) or `a,b,c`.
    #[arg(long, value_name = "A,B[,C]", allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    method: Option<String>,
    /// Second method for `compare`.
    #[arg(long)]
    against: Option<String>,
    #[arg(long = "t-max", allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// `bloch:a,b,c` or a named state.
    #[arg(long, allow_hyphen_values = true)]
    rho0: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Grid points per triangle edge.
    #[arg(long)]
    resolution: Option<usize>,
    /// Direction distribution for random-unitary runs: discrete, gaussian, sphere.
    #[arg(long)]
    directions: Option<String>,
    #[arg(long)]
    format: Option<String>,
    /// Output path, or `csv`/`json` for stdout in that format.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Rates,
    Classify,
    Triangle,
    Area,
    JumpSim,
    Embed,
    Violate,
    Compare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Rates => "rates",
            Command::Classify => "classify",
            Command::Triangle => "triangle",
            Command::Area => "area",
            Command::JumpSim => "jump-sim",
            Command::Embed => "embed",
            Command::Violate => "violate",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Analytic,
    TimeLocal,
    Volterra,
    VolterraPaper,
    ClassicalPropagator,
    ClassicalMarkov,
    Embedding,
    RandomUnitary,
    Jump,
    ExtendedJump,
    PaperQuadrature,
    MonteCarlo,
}

impl MethodTag {
    pub const ALL: [MethodTag; 12] = [
        MethodTag::Analytic,
        MethodTag::TimeLocal,
        MethodTag::Volterra,
        MethodTag::VolterraPaper,
        MethodTag::ClassicalPropagator,
        MethodTag::ClassicalMarkov,
        MethodTag::Embedding,
        MethodTag::RandomUnitary,
        MethodTag::Jump,
        MethodTag::ExtendedJump,
        MethodTag::PaperQuadrature,
        MethodTag::MonteCarlo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodTag::Analytic => "analytic",
            MethodTag::TimeLocal => "time-local",
            MethodTag::Volterra => "volterra",
            MethodTag::VolterraPaper => "volterra-paper",
            MethodTag::ClassicalPropagator => "classical-propagator",
            MethodTag::ClassicalMarkov => "classical-markov",
            MethodTag::Embedding => "embedding",
            MethodTag::RandomUnitary => "random-unitary",
            MethodTag::Jump => "jump",
            MethodTag::ExtendedJump => "extended-jump",
            MethodTag::PaperQuadrature => "paper-quadrature",
            MethodTag::MonteCarlo => "monte-carlo",
        }
    }

    pub fn is_trajectory(&self) -> bool {
        !matches!(self, MethodTag::PaperQuadrature | MethodTag::MonteCarlo)
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            MethodTag::RandomUnitary | MethodTag::Jump | MethodTag::ExtendedJump
        )
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodTag {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let alias = match s {
            "ode" => "time-local",
            "embed" => "embedding",
            "jump-sim" | "gillespie" => "jump",
            "mc" => "monte-carlo",
            "quadrature" => "paper-quadrature",
            other => other,
        };
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name() == alias)
            .ok_or_else(|| CliError::Usage(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Directions {
    Discrete,
    Gaussian,
    Sphere,
}

impl Directions {
    fn name(&self) -> &'static str {
        match self {
            Directions::Discrete => "discrete",
            Directions::Gaussian => "gaussian",
            Directions::Sphere => "sphere",
        }
    }
}

impl FromStr for Directions {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "discrete" | "axes" => Ok(Directions::Discrete),
            "gaussian" => Ok(Directions::Gaussian),
            "sphere" | "uniform" => Ok(Directions::Sphere),
            _ => Err(CliError::Usage(format!("unknown direction distribution `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

impl Format {
    fn name(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
    Mixed,
}

impl NamedState {
    const ALL: [NamedState; 7] = [
        NamedState::Zero,
        NamedState::One,
        NamedState::Plus,
        NamedState::Minus,
        NamedState::PlusI,
        NamedState::MinusI,
        NamedState::Mixed,
    ];

    fn name(&self) -> &'static str {
        match self {
            NamedState::Zero => "zero",
            NamedState::One => "one",
            NamedState::Plus => "plus",
            NamedState::Minus => "minus",
            NamedState::PlusI => "plus-i",
            NamedState::MinusI => "minus-i",
            NamedState::Mixed => "mixed",
        }
    }

    fn bloch(&self) -> [f64; 3] {
        match self {
            NamedState::Zero => [0.0, 0.0, 1.0],
            NamedState::One => [0.0, 0.0, -1.0],
            NamedState::Plus => [1.0, 0.0, 0.0],
            NamedState::Minus => [-1.0, 0.0, 0.0],
            NamedState::PlusI => [0.0, 1.0, 0.0],
            NamedState::MinusI => [0.0, -1.0, 0.0],
            NamedState::Mixed => [0.0, 0.0, 0.0],
        }
    }
}

/// Initial qubit state, written `bloch:a,b,c` or by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialState {
    Named(NamedState),
    Bloch([f64; 3]),
}

impl InitialState {
    pub fn bloch(&self) -> [f64; 3] {
        match self {
            InitialState::Named(n) => n.bloch(),
            InitialState::Bloch(b) => *b,
        }
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix::from_bloch(&BlochVector::new(self.bloch()).expect("validated on parse"))
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Named(n) => f.write_str(n.name()),
            InitialState::Bloch(b) => write!(f, "bloch:{},{},{}", b[0], b[1], b[2]),
        }
    }
}

impl FromStr for InitialState {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if let Some(rest) = s.strip_prefix("bloch:") {
            let v = parse_floats(rest, "--rho0")?;
            let b: [f64; 3] = v
                .try_into()
                .map_err(|_| CliError::Usage(format!("--rho0 needs three Bloch components: `{s}`")))?;
            BlochVector::new(b).map_err(|e| CliError::Usage(format!("--rho0: {e}")))?;
            return Ok(InitialState::Bloch(b));
        }
        NamedState::ALL
            .iter()
            .find(|n| n.name() == s)
            .map(|n| InitialState::Named(*n))
            .ok_or_else(|| CliError::Usage(format!("unknown initial state `{s}`")))
    }
}

impl TryFrom<String> for InitialState {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<InitialState> for String {
    fn from(s: InitialState) -> String {
        s.to_string()
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Weights as given; the third is inferred for two values.
    pub x: [f64; 3],
    pub method: MethodTag,
    pub against: Option<MethodTag>,
    pub t_max: f64,
    pub steps: usize,
    pub rho0: InitialState,
    pub seed: u64,
    pub samples: usize,
    pub resolution: usize,
    pub directions: Directions,
    pub format: Format,
    /// `None` writes to stdout.
    pub out: Option<PathBuf>,
}

fn parse_floats(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse `{v}` as a number")))
        })
        .collect()
}

/// Parses `a,b` or `a,b,c` and checks the simplex constraint.
pub fn parse_weights(s: &str) -> Result<[f64; 3], CliError> {
    let v = parse_floats(s, "--x")?;
    let x = match v.as_slice() {
        [a, b] => {
            let c = 1.0 - a - b;
            [*a, *b, if c < 0.0 && c > -SIMPLEX_TOL { 0.0 } else { c }]
        }
        [a, b, c] => [*a, *b, *c],
        _ => return Err(CliError::Usage(format!("--x needs two or three values, got `{s}`"))),
    };
    MixtureWeights::with_tolerance(x, SIMPLEX_TOL)
        .map_err(|e| CliError::Usage(format!("--x: {e} (tolerance {SIMPLEX_TOL:e})")))?;
    Ok(x)
}

impl RunConfig {
    pub fn weights(&self) -> MixtureWeights {
        MixtureWeights::with_tolerance(self.x, SIMPLEX_TOL).expect("validated on parse")
    }

    /// Parses arguments without the program name.
    pub fn from_args<I, S>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        let argv = std::iter::once(std::ffi::OsString::from("dephasing"))
            .chain(args.into_iter().map(Into::into));
        let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
        let (command, f) = match cli.command {
            CommandArgs::Evolve(f) => (Command::Evolve, f),
            CommandArgs::Rates(f) => (Command::Rates, f),
            CommandArgs::Classify(f) => (Command::Classify, f),
            CommandArgs::Triangle(f) => (Command::Triangle, f),
            CommandArgs::Area(f) => (Command::Area, f),
            CommandArgs::JumpSim(f) => (Command::JumpSim, f),
            CommandArgs::Embed(f) => (Command::Embed, f),
            CommandArgs::Violate(f) => (Command::Violate, f),
            CommandArgs::Compare(f) => (Command::Compare, f),
        };
        Self::resolve(command, f)
    }

    fn resolve(command: Command, f: Flags) -> Result<Self, CliError> {
        let x = match &f.x {
            Some(s) => parse_weights(s)?,
            None => [0.5, 0.5, 0.0],
        };
        let default_method = match command {
            Command::Area => MethodTag::PaperQuadrature,
            Command::JumpSim => MethodTag::Jump,
            Command::Embed => MethodTag::Embedding,
            _ => MethodTag::Analytic,
        };
        let method = match &f.method {
            Some(s) => s.parse()?,
            None => default_method,
        };
        match command {
            Command::Area if method.is_trajectory() => {
                return Err(CliError::Usage(format!(
                    "area supports paper-quadrature or monte-carlo, not {method}"
                )))
            }
            Command::JumpSim if !matches!(method, MethodTag::Jump | MethodTag::ExtendedJump) => {
                return Err(CliError::Usage(format!(
                    "jump-sim supports jump or extended-jump, not {method}"
                )))
            }
            Command::Embed if method != MethodTag::Embedding => {
                return Err(CliError::Usage(format!("embed does not take --method {method}")))
            }
            Command::Evolve | Command::Compare if !method.is_trajectory() => {
                return Err(CliError::Usage(format!("{method} is not an evolution method")))
            }
            _ => {}
        }
        let against = match (&f.against, command) {
            (Some(s), Command::Compare) => {
                let m: MethodTag = s.parse()?;
                if !m.is_trajectory() {
                    return Err(CliError::Usage(format!("{m} is not an evolution method")));
                }
                Some(m)
            }
            (None, Command::Compare) => Some(MethodTag::TimeLocal),
            (Some(_), _) => {
                return Err(CliError::Usage("--against is only used by compare".into()))
            }
            (None, _) => None,
        };
        let t_max = f.t_max.unwrap_or(5.0);
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(CliError::Usage(format!("--t-max must be positive, got {t_max}")));
        }
        let steps = f.steps.unwrap_or(100);
        if steps == 0 {
            return Err(CliError::Usage("--steps must be at least 1".into()));
        }
        let rho0 = match &f.rho0 {
            Some(s) => s.parse()?,
            None => InitialState::Named(NamedState::Plus),
        };
        let samples = f.samples.unwrap_or(match command {
            Command::Area => 1_000_000,
            Command::Classify => 1000,
            Command::Violate => 64,
            _ => 100_000,
        });
        if samples == 0 {
            return Err(CliError::Usage("--samples must be at least 1".into()));
        }
        let resolution = f.resolution.unwrap_or(50);
        if resolution == 0 {
            return Err(CliError::Usage("--resolution must be at least 1".into()));
        }
        let directions = match &f.directions {
            Some(s) => s.parse()?,
            None => Directions::Discrete,
        };
        if directions == Directions::Sphere
            && x.iter().any(|v| (v - 1.0 / 3.0).abs() > SIMPLEX_TOL)
        {
            return Err(CliError::Usage(
                "uniform sphere directions require --x 1/3,1/3,1/3".into(),
            ));
        }
        let mut format = f.format.as_deref().map(str::parse).transpose()?;
        let out = match f.out.as_deref() {
            None => None,
            Some("") => return Err(CliError::Usage("--out needs a path".into())),
            Some(s @ ("csv" | "json")) => {
                let shorthand: Format = s.parse()?;
                if format.is_some_and(|f| f != shorthand) {
                    return Err(CliError::Usage(format!("--out {s} conflicts with --format")));
                }
                format = Some(shorthand);
                None
            }
            Some(p) => Some(PathBuf::from(p)),
        };
        let format = format.unwrap_or(match command {
            Command::Area | Command::Violate => Format::Json,
            _ => Format::Csv,
        });
        Ok(RunConfig {
            command,
            x,
            method,
            against,
            t_max,
            steps,
            rho0,
            seed: f.seed.unwrap_or(0),
            samples,
            resolution,
            directions,
            format,
            out,
        })
    }

    /// Arguments that parse back to this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec![
            self.command.name().to_string(),
            "--x".into(),
            format!("{},{},{}", self.x[0], self.x[1], self.x[2]),
            "--method".into(),
            self.method.name().into(),
        ];
        if let Some(m) = self.against {
            a.extend(["--against".into(), m.name().into()]);
        }
        a.extend([
            "--t-max".into(),
            self.t_max.to_string(),
            "--steps".into(),
            self.steps.to_string(),
            "--rho0".into(),
            self.rho0.to_string(),
            "--seed".into(),
            self.seed.to_string(),
            "--samples".into(),
            self.samples.to_string(),
            "--resolution".into(),
            self.resolution.to_string(),
            "--directions".into(),
            self.directions.name().into(),
            "--format".into(),
            self.format.name().into(),
        ]);
        if let Some(p) = &self.out {
            a.extend(["--out".into(), p.display().to_string()]);
        }
        a
    }
}
