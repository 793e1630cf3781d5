use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcluster::identities::{sweep_all, sweep_family, IdentityFamily, IdentityReport};
use qcluster::parallel::Execution;
use qcluster::relations::{
    boundary_higher_checks, cartan_matrix, quantum_group_checks, run_checks, Check, LemmaVariant,
    RelationError, Side, VerificationCertificate,
};
use qcluster::seeds::QuantumSeed;

/// Exit status when every requested check passes.
pub const EXIT_OK: i32 = 0;
/// Exit status when a verification produced a nonzero remainder.
pub const EXIT_FAILED: i32 = 1;
/// Exit status for malformed input: bad flags, unreadable or invalid seed files, out-of-range parameters.
pub const EXIT_MALFORMED: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "qcluster",
    version,
    about = "Exact verification of fundamental relations between one-step quantum cluster variables"
)]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,

    /// Run independent checks one after another instead of on the thread pool.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct SeedArg {
    /// Seed file (JSON).
    #[arg(long)]
    pub seed: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LemmaKind {
    /// First-order vanishing sum.
    L32,
    /// Generalized vanishing sum with outer exponent m and shift t.
    L41,
    /// Power products y_i^t x_i^t and x_i^t y_i^t in three forms.
    Power,
    /// Closed form of y_i y_j - y_j y_i.
    Commutator,
    /// Support of the inner sums in the reduction step.
    Support,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a seed file and check every invariant, including compatibility.
    Validate(SeedArg),
    /// Mutate in direction k and print the new Lambda and Btilde.
    Mutate {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        k: usize,
    },
    /// Print the mutated variables x'_k over the seed's torus.
    Vars {
        #[command(flatten)]
        seed: SeedArg,
        /// Only this direction.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Fundamental relations; all ordered pairs unless --i and --j are given.
    VerifySerre {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, requires = "j")]
        i: Option<usize>,
        #[arg(long, requires = "i")]
        j: Option<usize>,
        /// Also check the reversed-side family where b_ij <= 0.
        #[arg(long)]
        opposite: bool,
    },
    /// Higher-order relation for y_i^{m+1-r} y_j^l y_i^r.
    VerifyHigher {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value_t = 1)]
        l: i64,
        #[arg(long)]
        m: i64,
        /// Evaluate instances outside the stated range instead of rejecting them.
        #[arg(long)]
        exploratory: bool,
    },
    /// Vanishing-sum lemmas, power products, commutators and reduction supports.
    VerifyLemmas {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t = LemmaKind::L32)]
        variant: LemmaKind,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: Option<usize>,
        /// Outer exponent for l41.
        #[arg(long)]
        m: Option<i64>,
        /// Shift for l41, power exponent for power.
        #[arg(long)]
        t: Option<i64>,
        /// Order for support.
        #[arg(long)]
        l: Option<i64>,
        #[arg(long, value_enum, default_value_t = SideArg::Both)]
        side: SideArg,
        #[arg(long)]
        exploratory: bool,
    },
    /// Exhaustive q-identity sweep over the stated parameter ranges.
    Identities {
        /// Only this family, e.g. VANDERMONDE or double-sum-pos.
        #[arg(long)]
        family: Option<String>,
    },
    /// Validation, all fundamental relations and the boundary higher-order instances.
    Suite(SeedArg),
}

/// Exit status and the two output streams of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MALFORMED,
            stdout: String::new(),
            stderr: format!("error: {}\n", message.into()),
        }
    }
}

/// Parses the arguments (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_MALFORMED
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(text)
            }
        }
    }
}

pub fn dispatch(cli: &Cli) -> Outcome {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match &cli.command {
        Command::Validate(s) => validate(&s.seed, cli.format),
        Command::Mutate { seed, k } => mutate(&seed.seed, *k, cli.format),
        Command::Vars { seed, k } => vars(&seed.seed, *k, cli.format),
        Command::VerifySerre {
            seed,
            i,
            j,
            opposite,
        } => load(&seed.seed).and_then(|s| {
            let checks = match (i, j) {
                (Some(i), Some(j)) => {
                    let mut c = vec![Check::Serre { i: *i, j: *j }];
                    if *opposite {
                        c.push(Check::SerreOpposite { i: *i, j: *j });
                    }
                    c
                }
                _ if *opposite => quantum_group_checks(&s),
                _ => quantum_group_checks(&s)
                    .into_iter()
                    .filter(|c| matches!(c, Check::Serre { .. }))
                    .collect(),
            };
            certificates(&s, &checks, exec, cli.format)
        }),
        Command::VerifyHigher {
            seed,
            i,
            j,
            l,
            m,
            exploratory,
        } => load(&seed.seed).and_then(|s| {
            let check = Check::Higher {
                i: *i,
                j: *j,
                l: *l,
                m: *m,
                exploratory: *exploratory,
            };
            certificates(&s, &[check], exec, cli.format)
        }),
        Command::VerifyLemmas {
            seed,
            variant,
            i,
            j,
            m,
            t,
            l,
            side,
            exploratory,
        } => load(&seed.seed).and_then(|s| {
            let checks = lemma_checks(*variant, *i, *j, *m, *t, *l, *side, *exploratory)?;
            certificates(&s, &checks, exec, cli.format)
        }),
        Command::Identities { family } => identities(family.as_deref(), exec, cli.format),
        Command::Suite(s) => suite(&s.seed, exec, cli.format),
    };
    result.unwrap_or_else(|o| o)
}

fn load(path: &PathBuf) -> Result<QuantumSeed, Outcome> {
    QuantumSeed::load(path)
        .map_err(|e| Outcome::malformed(format!("invalid seed {}: {e}", path.display())))
}

fn relation_error(e: RelationError) -> Outcome {
    Outcome::malformed(e.to_string())
}

fn require<T>(v: Option<T>, flag: &str, variant: &str) -> Result<T, Outcome> {
    v.ok_or_else(|| Outcome::malformed(format!("--{flag} is required for --variant {variant}")))
}

#[allow(clippy::too_many_arguments)]
fn lemma_checks(
    variant: LemmaKind,
    i: usize,
    j: Option<usize>,
    m: Option<i64>,
    t: Option<i64>,
    l: Option<i64>,
    side: SideArg,
    exploratory: bool,
) -> Result<Vec<Check>, Outcome> {
    Ok(match variant {
        LemmaKind::L32 => vec![Check::LemmaSum {
            i,
            j: require(j, "j", "l32")?,
            variant: LemmaVariant::L32,
            exploratory,
        }],
        LemmaKind::L41 => vec![Check::LemmaSum {
            i,
            j: require(j, "j", "l41")?,
            variant: LemmaVariant::L41 {
                m: require(m, "m", "l41")?,
                t: require(t, "t", "l41")?,
            },
            exploratory,
        }],
        LemmaKind::Power => {
            let t = require(t, "t", "power")?;
            let t = u32::try_from(t)
                .ok()
                .filter(|&t| t >= 1)
                .ok_or_else(|| Outcome::malformed(format!("--t must be at least 1, got {t}")))?;
            let sides = match side {
                SideArg::Left => vec![Side::Left],
                SideArg::Right => vec![Side::Right],
                SideArg::Both => vec![Side::Left, Side::Right],
            };
            sides
                .into_iter()
                .map(|side| Check::PowerProduct { i, t, side })
                .collect()
        }
        LemmaKind::Commutator => vec![Check::Commutator {
            i,
            j: require(j, "j", "commutator")?,
        }],
        LemmaKind::Support => vec![Check::ReductionSupport {
            i,
            j: require(j, "j", "support")?,
            l: require(l, "l", "support")?,
        }],
    })
}

/// Renders certificates in order; exit 1 if any failed, 2 if any instance was rejected.
fn certificates(
    seed: &QuantumSeed,
    checks: &[Check],
    exec: Execution,
    format: Format,
) -> Result<Outcome, Outcome> {
    let certs: Vec<VerificationCertificate> = run_checks(seed, checks, exec)
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(relation_error)?;
    let mut out = String::new();
    render_certificates(&certs, format, &mut out);
    let code = if certs.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    Ok(Outcome {
        code,
        stdout: out,
        stderr: String::new(),
    })
}

fn render_certificates(certs: &[VerificationCertificate], format: Format, out: &mut String) {
    match format {
        Format::Text => {
            for c in certs {
                out.push_str(&c.render_block());
            }
            for c in certs {
                writeln!(out, "{}", c.summary_line()).unwrap();
            }
            let failed = certs.iter().filter(|c| !c.pass).count();
            writeln!(out, "{} checks, {} failed", certs.len(), failed).unwrap();
        }
        Format::Json => {
            for c in certs {
                writeln!(out, "{}", c.to_json()).unwrap();
            }
        }
    }
}

fn validate(path: &PathBuf, format: Format) -> Result<Outcome, Outcome> {
    let s = load(path)?;
    let cartan =
        cartan_matrix(&s.exchange().principal(), s.symmetrizer()).map_err(relation_error)?;
    let edges: Vec<String> = s
        .quiver_edges()
        .iter()
        .map(|(a, b)| format!("{a}->{b}"))
        .collect();
    let out = match format {
        Format::Text => format!(
            "valid seed\n{s}\nprincipal coefficients: {}\nquiver: {}\ncartan =\n{cartan}\n",
            if s.is_principal() { "yes" } else { "no" },
            if edges.is_empty() {
                "(no edges)".to_string()
            } else {
                edges.join(", ")
            },
        ),
        Format::Json => format!(
            "{}\n",
            serde_json::json!({
                "valid": true,
                "n": s.n(),
                "m": s.m(),
                "principal": s.is_principal(),
                "quiver": s.quiver_edges(),
                "cartan": cartan.to_rows(),
            })
        ),
    };
    Ok(Outcome::ok(out))
}

fn mutate(path: &PathBuf, k: usize, format: Format) -> Result<Outcome, Outcome> {
    let s = load(path)?;
    let mu = s.mutate(k).map_err(|e| Outcome::malformed(e.to_string()))?;
    let out = match format {
        Format::Text => format!(
            "Lambda_{k} =\n{}\nBtilde_{k} =\n{}\n",
            mu.form().matrix(),
            mu.exchange().matrix()
        ),
        Format::Json => format!("{}\n", mu.to_json()),
    };
    Ok(Outcome::ok(out))
}

fn vars(path: &PathBuf, k: Option<usize>, format: Format) -> Result<Outcome, Outcome> {
    let s = load(path)?;
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None => (1..=s.n()).collect(),
    };
    let mut out = String::new();
    for k in ks {
        let y = s
            .mutated_variable(k)
            .map_err(|e| Outcome::malformed(e.to_string()))?;
        match format {
            Format::Text => writeln!(out, "y_{k} = {}", y.canonical_string()).unwrap(),
            Format::Json => writeln!(
                out,
                "{}",
                serde_json::json!({ "k": k, "value": y.canonical_string() })
            )
            .unwrap(),
        }
    }
    Ok(Outcome::ok(out))
}

fn identities(family: Option<&str>, exec: Execution, format: Format) -> Result<Outcome, Outcome> {
    let reports: Vec<IdentityReport> = match family {
        Some(name) => {
            let f: IdentityFamily =
                name.parse()
                    .map_err(|e: qcluster::identities::IdentityError| {
                        Outcome::malformed(e.to_string())
                    })?;
            sweep_family(f, exec)
        }
        None => sweep_all(exec),
    };
    let mut out = String::new();
    for r in &reports {
        match format {
            Format::Text => writeln!(out, "{r}").unwrap(),
            Format::Json => writeln!(
                out,
                "{}",
                serde_json::json!({
                    "family": r.family.name(),
                    "params": r.params,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "verdict": r.verdict(),
                })
            )
            .unwrap(),
        }
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if format == Format::Text {
        writeln!(out, "{} checks, {} failed", reports.len(), failed).unwrap();
    }
    Ok(Outcome {
        code: if failed == 0 { EXIT_OK } else { EXIT_FAILED },
        stdout: out,
        stderr: String::new(),
    })
}

fn suite(path: &PathBuf, exec: Execution, format: Format) -> Result<Outcome, Outcome> {
    let s = load(path)?;
    let mut checks = quantum_group_checks(&s);
    checks.extend(boundary_higher_checks(&s));
    let mut out = Outcome::ok(String::new());
    if format == Format::Text {
        out.stdout.push_str("seed valid\n");
    }
    let certs = certificates(&s, &checks, exec, format)?;
    out.stdout.push_str(&certs.stdout);
    out.code = certs.code;
    Ok(out)
}
