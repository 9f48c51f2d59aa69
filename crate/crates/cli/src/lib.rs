//! Command-line driver for the document locker.
//!
//! Every command loads the store directory, performs one service operation,
//! and saves the store again. Results are one line of `key=value` pairs on
//! stdout; binary artifacts only ever go to files.

mod inspect;
mod scenario;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use privlocker_core::{AccessTree, AttributeLabel, Bls12, FormatError, PolicyError, Record, SchemeError};
use privlocker_service::{is_initialized, DocumentUri, KeyInsert, LockerError, LockerService, TokenSource};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

type Service = LockerService<Bls12>;

#[derive(Debug, Parser)]
#[command(name = "privlocker", version, about = "Privacy-enhanced document locker")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,

    /// Deterministic randomness (debug builds only).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a new store with fresh master keys.
    Setup,
    /// Register an attribute issuer.
    RegisterIssuer {
        #[arg(long)]
        issuer: String,
        /// Attribute names the issuer may assign (comma separated; empty allows any).
        #[arg(long, value_delimiter = ',')]
        catalog: Vec<String>,
    },
    /// Merge attributes into an identity's registry entry.
    PushAttrs {
        #[arg(long)]
        identity: String,
        /// Labels `issuer/name`, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        attrs: Vec<String>,
    },
    /// Print an identity's attributes.
    PullAttrs {
        #[arg(long)]
        identity: String,
    },
    /// Prepare (or look up) the combined token for a subscriber, issuer and policy.
    GenToken {
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        subscriber: String,
        #[arg(long)]
        issuer_policy: String,
        #[arg(long)]
        subscriber_policy: String,
        /// Also write the token record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encrypt and file a PRIV document.
    IssueDoc {
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        subscriber: String,
        #[arg(long)]
        issuer_policy: String,
        #[arg(long)]
        subscriber_policy: String,
        /// Plaintext document.
        #[arg(long)]
        file: PathBuf,
        /// Also write the ciphertext record here.
        #[arg(long)]
        ciphertext_out: Option<PathBuf>,
    },
    /// Issue an attribute key over the identity's attributes from the given issuers.
    GenKey {
        #[arg(long)]
        identity: String,
        #[arg(long, value_delimiter = ',', required = true)]
        issuers: Vec<String>,
        /// Also write the resulting key record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decrypt a PRIV document for a requester and write the plaintext.
    FetchDoc {
        #[arg(long)]
        requester: String,
        #[arg(long)]
        uri: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe a serialized record.
    Inspect { path: PathBuf },
    /// Run a scenario script.
    RunScenario { file: PathBuf },
}

/// A failure with a stable code.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    /// Distinct nonzero exit status per error code.
    pub fn exit_code(&self) -> u8 {
        exit_code_for(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

macro_rules! from_coded {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.code(), e.to_string())
            }
        }
    )*};
}

from_coded!(LockerError, SchemeError, PolicyError, FormatError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("io-error", e.to_string())
    }
}

/// Exit status table. 1 is reserved for unclassified failures and 2 for
/// argument errors reported by the parser.
pub const EXIT_CODES: &[(&str, u8)] = &[
    ("policy-not-satisfied", 10),
    ("authentication-failed", 11),
    ("bad-signature", 12),
    ("no-covering-key", 13),
    ("unknown-uri", 14),
    ("wrong-doctype", 15),
    ("invalid-uri", 16),
    ("unknown-issuer", 17),
    ("unknown-identity", 18),
    ("unknown-attribute", 19),
    ("duplicate-issuer", 20),
    ("missing-attributes", 21),
    ("invalid-input", 22),
    ("syntax-error", 23),
    ("threshold-out-of-range", 24),
    ("empty-gate", 25),
    ("invalid-label", 26),
    ("overlapping-tokens", 27),
    ("store-missing", 30),
    ("store-exists", 31),
    ("version-mismatch", 32),
    ("checksum-mismatch", 33),
    ("corrupt-store", 34),
    ("malformed-encoding", 35),
    ("off-group-point", 36),
    ("not-implemented", 40),
    ("io-error", 41),
    ("seed-unavailable", 42),
    ("usage", 2),
    ("scenario-failed", 50),
];

pub fn exit_code_for(code: &str) -> u8 {
    EXIT_CODES.iter().find(|(c, _)| *c == code).map_or(1, |(_, n)| *n)
}

/// Ordered `key=value` result of one command.
pub type Output = Vec<(String, String)>;

fn kv(pairs: &[(&str, String)]) -> Output {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn render_output(out: &Output) -> String {
    out.iter()
        .map(|(k, v)| {
            let v = shlex::try_quote(v).map(|c| c.into_owned()).unwrap_or_else(|_| format!("{v:?}"));
            format!("{k}={v}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn store_dir(cli: &Cli) -> Result<&Path, CliError> {
    cli.store
        .as_deref()
        .ok_or_else(|| CliError::new("invalid-input", "--store <dir> is required"))
}

fn check_seed(seed: Option<u64>) -> Result<Option<u64>, CliError> {
    if seed.is_some() && !cfg!(debug_assertions) {
        return Err(CliError::new("seed-unavailable", "--seed is only accepted by test builds"));
    }
    Ok(seed)
}

fn open(cli: &Cli) -> Result<Service, CliError> {
    let mut svc = Service::load(store_dir(cli)?)?;
    if let Some(seed) = check_seed(cli.seed)? {
        svc.reseed(seed);
    }
    Ok(svc)
}

fn parse_policy(text: &str) -> Result<AccessTree, CliError> {
    Ok(text.parse::<AccessTree>()?)
}

fn parse_labels(items: &[String]) -> Result<BTreeSet<AttributeLabel>, CliError> {
    items.iter().map(|s| Ok(s.trim().parse::<AttributeLabel>()?)).collect()
}

fn write_artifact(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn token_source(s: TokenSource) -> String {
    match s {
        TokenSource::Cached => "cached".into(),
        TokenSource::Handshake => "handshake".into(),
    }
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Setup => {
            let dir = store_dir(cli)?;
            if is_initialized(dir) {
                return Err(CliError::new("store-exists", format!("{} already holds a store", dir.display())));
            }
            let rng = match check_seed(cli.seed)? {
                Some(seed) => ChaCha20Rng::seed_from_u64(seed),
                None => ChaCha20Rng::from_entropy(),
            };
            let svc = Service::setup(rng);
            svc.save(dir)?;
            Ok(kv(&[
                ("store", dir.display().to_string()),
                ("backend", "bls12-381".into()),
                ("mpk_sha256", sha256_hex(&svc.mpk().to_bytes())),
            ]))
        }
        Command::RegisterIssuer { issuer, catalog } => {
            let mut svc = open(cli)?;
            let catalog: Vec<String> = catalog.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            let rec = svc.register_issuer(issuer, catalog)?;
            svc.save(store_dir(cli)?)?;
            Ok(kv(&[
                ("issuer", issuer.clone()),
                ("catalog", rec.catalog.into_iter().collect::<Vec<_>>().join(",")),
            ]))
        }
        Command::PushAttrs { identity, attrs } => {
            let mut svc = open(cli)?;
            let all = svc.push_attrs(identity, &parse_labels(attrs)?)?;
            svc.save(store_dir(cli)?)?;
            Ok(kv(&[("identity", identity.clone()), ("attrs", join_labels(&all))]))
        }
        Command::PullAttrs { identity } => {
            let svc = open(cli)?;
            let all = svc.pull_attrs(identity)?;
            Ok(kv(&[("identity", identity.clone()), ("attrs", join_labels(&all))]))
        }
        Command::GenToken {
            issuer,
            subscriber,
            issuer_policy,
            subscriber_policy,
            out,
        } => {
            let mut svc = open(cli)?;
            let (pi, ps) = (parse_policy(issuer_policy)?, parse_policy(subscriber_policy)?);
            let (key, source) = svc.prepare_token(issuer, subscriber, &pi, &ps)?;
            svc.save(store_dir(cli)?)?;
            let token = svc.token(&key).expect("token prepared");
            if let Some(path) = out {
                write_artifact(path, &token.to_bytes())?;
            }
            let stats = svc.tokens().stats();
            Ok(kv(&[
                ("token", key.to_string()),
                ("policy", token.tree().to_string()),
                ("source", token_source(source)),
                ("handshakes", stats.handshakes.to_string()),
                ("hits", stats.hits.to_string()),
            ]))
        }
        Command::IssueDoc {
            issuer,
            subscriber,
            issuer_policy,
            subscriber_policy,
            file,
            ciphertext_out,
        } => {
            let document = fs::read(file)?;
            let mut svc = open(cli)?;
            let (pi, ps) = (parse_policy(issuer_policy)?, parse_policy(subscriber_policy)?);
            let uri = svc.issue_priv_document(issuer, subscriber, &pi, &ps, &document)?;
            svc.save(store_dir(cli)?)?;
            if let Some(path) = ciphertext_out {
                let doc = svc.documents().get(&uri).expect("document filed");
                write_artifact(path, &doc.ciphertext.to_bytes())?;
            }
            let stats = svc.tokens().stats();
            Ok(kv(&[
                ("uri", uri.to_string()),
                ("document_bytes", document.len().to_string()),
                ("document_sha256", sha256_hex(&document)),
                ("handshakes", stats.handshakes.to_string()),
                ("hits", stats.hits.to_string()),
            ]))
        }
        Command::GenKey { identity, issuers, out } => {
            let mut svc = open(cli)?;
            let set: BTreeSet<String> = issuers.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            let outcome = svc.gen_ab_pvt_key(identity, &set)?;
            svc.save(store_dir(cli)?)?;
            let (handle, status, evicted) = match outcome {
                KeyInsert::Stored { handle, evicted } => (handle, "stored", evicted),
                KeyInsert::Dominated { by } => (by, "dominated", Vec::new()),
            };
            if let Some(path) = out {
                write_artifact(path, &svc.key(&handle).expect("handle names a stored key").to_bytes())?;
            }
            let evicted: Vec<String> = evicted.iter().map(ToString::to_string).collect();
            Ok(kv(&[
                ("handle", handle.to_string()),
                ("status", status.into()),
                ("evicted", if evicted.is_empty() { "-".into() } else { evicted.join(";") }),
            ]))
        }
        Command::FetchDoc { requester, uri, out } => {
            let svc = open(cli)?;
            let uri: DocumentUri = uri.parse()?;
            let plain = svc.fetch_priv_doc(requester, &uri)?;
            write_artifact(out, &plain)?;
            Ok(kv(&[
                ("uri", uri.to_string()),
                ("bytes", plain.len().to_string()),
                ("sha256", sha256_hex(&plain)),
            ]))
        }
        Command::Inspect { path } => inspect::inspect(&fs::read(path)?),
        Command::RunScenario { file } => scenario::run(cli, file),
    }
}

fn join_labels(labels: &BTreeSet<AttributeLabel>) -> String {
    labels.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Parses `args`, runs the command, prints the result, and returns the exit
/// status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit_code_for("usage") } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{}", render_output(&out));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
