use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use agentwire::authority::{Authority, SignedContext, TrustStore, VerifyError};
use agentwire::context::{context_hash, SharedContext};
use agentwire::firewall::PolicySet;
use agentwire::scenarios::{
    run_attack_demo, run_supplychain_demo, run_travel_demo, AttackKind, SupplyOptions, TravelOptions,
};
use agentwire::simnet::SimReport;
use agentwire::snl::validate_against;
use agentwire::wire::{decode_envelope, parse_text, Envelope};

const EXIT_VERIFY_FAILED: u8 = 2;
const EXIT_REVOKED: u8 = 3;

#[derive(Parser)]
#[command(name = "agentwire", version, about = "Semantic agent protocol demos and context toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    Travel,
    Supplychain,
}

#[derive(Clone, Copy, ValueEnum)]
enum Attack {
    Downgrade,
    Poison,
    Sdos,
    Inject,
}

impl From<Attack> for AttackKind {
    fn from(a: Attack) -> Self {
        match a {
            Attack::Downgrade => AttackKind::Downgrade,
            Attack::Poison => AttackKind::Poison,
            Attack::Sdos => AttackKind::Sdos,
            Attack::Inject => AttackKind::Inject,
        }
    }
}

#[derive(clap::Args)]
struct Output {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the event trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the key=value metrics block here instead of stdout.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the worked scenarios.
    Demo {
        scenario: Demo,
        #[command(flatten)]
        out: Output,
        /// Firewall policy file (JSON) for every agent.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Run an attack against its defence.
    Attack {
        kind: Attack,
        #[command(flatten)]
        out: Output,
    },
    /// Validate a message (JSON envelope or framed bytes) against a context.
    Validate {
        #[arg(long)]
        context: PathBuf,
        #[arg(long)]
        message: PathBuf,
    },
    #[command(subcommand)]
    Context(ContextCmd),
    #[command(subcommand)]
    Authority(AuthorityCmd),
}

#[derive(Subcommand)]
enum ContextCmd {
    /// Sign a context document; prints the signed document.
    Sign {
        file: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// Signing authority; defaults to the document's authority_id.
        #[arg(long)]
        authority: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a signed context against a trust store.
    Verify {
        file: PathBuf,
        #[arg(long)]
        trust: PathBuf,
        /// Verification time in ms, for revocation freshness.
        #[arg(long, default_value_t = 0)]
        now: u64,
    },
    /// Print the SHA-256 of a context's canonical form.
    Hash { file: PathBuf },
}

#[derive(Subcommand)]
enum AuthorityCmd {
    /// Issue a signed revocation list.
    Revoke {
        urns: Vec<String>,
        #[arg(long)]
        key: PathBuf,
        /// Issuing authority; defaults to the key file's stem.
        #[arg(long)]
        authority: Option<String>,
        #[arg(long, default_value_t = 0)]
        issued_at: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

type Fallible<T> = Result<T, String>;

fn read(path: &Path) -> Fallible<Vec<u8>> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Fallible<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(report: &SimReport, out: &Output) -> Fallible<()> {
    if let Some(p) = &out.trace {
        fs::write(p, report.trace_text()).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    write_or_print(out.metrics.as_deref(), &report.metrics.to_kv())
}

/// A signed document, or a bare context document.
fn load_context(path: &Path) -> Fallible<SharedContext> {
    let bytes = read(path)?;
    match SignedContext::from_bytes(&bytes) {
        Ok(sc) => Ok(sc.context),
        Err(_) => SharedContext::from_bytes(&bytes).map_err(|e| e.to_string()),
    }
}

fn load_envelope(path: &Path) -> Fallible<Envelope> {
    let bytes = read(path)?;
    if bytes.first().is_some_and(|b| b.is_ascii_whitespace() || *b == b'{') {
        let doc = parse_text(&bytes).map_err(|e| e.to_string())?;
        Envelope::from_document(doc).map_err(|e| e.to_string())
    } else {
        decode_envelope(&bytes).map_err(|e| e.to_string())
    }
}

fn run(cli: Cli) -> Fallible<ExitCode> {
    match cli.command {
        Command::Demo { scenario, out, policy } => {
            let policies = match &policy {
                Some(p) => {
                    let text = String::from_utf8(read(p)?).map_err(|e| e.to_string())?;
                    PolicySet::from_json(&text).map_err(|e| e.to_string())?
                }
                None => PolicySet::reference(),
            };
            let report = match scenario {
                Demo::Travel => {
                    let o = run_travel_demo(&TravelOptions { seed: out.seed, policies, ..TravelOptions::default() })
                        .map_err(|e| e.to_string())?;
                    for c in &o.confirmations {
                        eprintln!("confirmed: {}", agentwire::wire::canonical_string(c).unwrap_or_default());
                    }
                    eprintln!("clarification rounds per booking: {:?}", o.rounds_per_booking);
                    o.report
                }
                Demo::Supplychain => {
                    let o = run_supplychain_demo(&SupplyOptions { seed: out.seed, policies, ..SupplyOptions::default() })
                        .map_err(|e| e.to_string())?;
                    eprintln!("aggregate: wholesaler {} distributor {}", o.wholesaler_total, o.distributor_total);
                    o.report
                }
            };
            emit(&report, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack { kind, out } => {
            let outcome = run_attack_demo(kind.into(), out.seed).map_err(|e| e.to_string())?;
            eprintln!("{}", outcome.summary());
            emit(outcome.report(), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { context, message } => {
            let ctx = load_context(&context)?;
            let env = load_envelope(&message)?;
            if env.context_urn.as_ref() != Some(&ctx.urn) {
                println!(
                    "invalid: message context {} does not match {}",
                    env.context_urn.as_ref().map_or("(none)".into(), ToString::to_string),
                    ctx.urn
                );
                return Ok(ExitCode::from(EXIT_VERIFY_FAILED));
            }
            match validate_against(&ctx, env.performative, &env.content) {
                Ok(_) => {
                    println!("valid under {}", ctx.urn);
                    Ok(ExitCode::SUCCESS)
                }
                Err(report) => {
                    for v in &report.violations {
                        println!("invalid: {v}");
                    }
                    Ok(ExitCode::from(EXIT_VERIFY_FAILED))
                }
            }
        }
        Command::Context(ContextCmd::Sign { file, key, authority, out }) => {
            let ctx = SharedContext::from_bytes(&read(&file)?).map_err(|e| e.to_string())?;
            let id = authority.unwrap_or_else(|| ctx.authority_id.clone());
            let seed = String::from_utf8(read(&key)?).map_err(|e| e.to_string())?;
            let auth = Authority::from_seed_hex(id, &seed).map_err(|e| e.to_string())?;
            write_or_print(out.as_deref(), &auth.sign_context(&ctx).to_pretty_json())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Context(ContextCmd::Verify { file, trust, now }) => {
            let sc = SignedContext::from_bytes(&read(&file)?).map_err(|e| e.to_string())?;
            let store = TrustStore::from_bytes(&read(&trust)?).map_err(|e| e.to_string())?;
            match store.verify(&sc, now) {
                Ok(()) => {
                    println!("ok {} {}", sc.context.urn, sc.hash());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ VerifyError::Revoked(_)) => {
                    println!("revoked: {e}");
                    Ok(ExitCode::from(EXIT_REVOKED))
                }
                Err(e) => {
                    println!("verification failed: {e}");
                    Ok(ExitCode::from(EXIT_VERIFY_FAILED))
                }
            }
        }
        Command::Context(ContextCmd::Hash { file }) => {
            let ctx = load_context(&file)?;
            println!("{}", context_hash(&ctx));
            Ok(ExitCode::SUCCESS)
        }
        Command::Authority(AuthorityCmd::Revoke { urns, key, authority, issued_at, out }) => {
            let id = match authority {
                Some(a) => a,
                None => key
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or("cannot infer authority from key file name; pass --authority")?
                    .to_string(),
            };
            let urns = urns
                .iter()
                .map(|u| u.parse().map_err(|e: agentwire::context::ContextError| e.to_string()))
                .collect::<Fallible<Vec<_>>>()?;
            let seed = String::from_utf8(read(&key)?).map_err(|e| e.to_string())?;
            let auth = Authority::from_seed_hex(id, &seed).map_err(|e| e.to_string())?;
            write_or_print(out.as_deref(), &auth.revocation_list(issued_at, urns).to_pretty_json())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
