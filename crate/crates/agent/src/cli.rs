use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fairhaven_core::upload::{SyncView, UploadManifest};
use serde::Serialize;
use serde_json::json;

use crate::client::Api;
use crate::download::download;
use crate::ds;
use crate::error::{AgentError, Result};
use crate::ledger::{ledger_dir, Ledger};
use crate::profile::{default_config_dir, Profile, Profiles};
use crate::scan::expand;
use crate::upload::{upload, UploadOptions, DEFAULT_CHUNK_SIZE, DEFAULT_RETRIES, DEFAULT_WORKERS};

#[derive(Debug, Parser)]
#[command(name = "fh", version, about = "fairhaven command line agent")]
pub struct Cli {
    /// Where profiles and upload ledgers live.
    #[arg(long, global = true, env = "FH_CONFIG_DIR")]
    pub config_dir: Option<PathBuf>,
    /// Profile to use instead of the active one.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Emit one JSON document on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manage server profiles.
    #[command(subcommand)]
    Profile(ProfileCmd),
    /// Create or inspect upload manifests.
    #[command(subcommand)]
    Manifest(ManifestCmd),
    /// Upload every incomplete entry of a manifest.
    Upload(UploadArgs),
    /// Download a published version by dataset or DOI and verify it.
    Download(DownloadArgs),
    /// Dataset tree and status commands.
    #[command(subcommand)]
    Ds(DsCmd),
}

#[derive(Debug, Subcommand)]
pub enum ProfileCmd {
    Add {
        name: String,
        #[arg(long)]
        server: String,
        #[arg(long)]
        token: String,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        chunk_size: Option<u64>,
    },
    Use {
        name: String,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum ManifestCmd {
    Create { dataset: String, paths: Vec<PathBuf> },
    Show { manifest: String },
}

#[derive(Debug, Args)]
pub struct UploadArgs {
    pub manifest: String,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub chunk_size: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_RETRIES)]
    pub retries: u32,
}

#[derive(Debug, Args)]
pub struct DownloadArgs {
    /// Dataset id, dataset name or DOI.
    pub target: String,
    pub dest: PathBuf,
    #[arg(long)]
    pub version: Option<u32>,
    /// Payer token for requester-pays datasets.
    #[arg(long)]
    pub payer: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum DsCmd {
    Ls { dataset: String },
    Mv { dataset: String, target: String, destination: String },
    Rename { dataset: String, target: String, name: String },
    Rm { dataset: String, target: String },
    Status {
        dataset: String,
        #[arg(long)]
        set: Option<String>,
    },
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

struct Session {
    config_dir: PathBuf,
    profile: Profile,
    api: Api,
}

fn session(cli: &Cli) -> Result<Session> {
    let config_dir = cli.config_dir.clone().unwrap_or_else(default_config_dir);
    let profiles = Profiles::load(&config_dir)?;
    let (_, profile) = profiles.resolve(cli.profile.as_deref())?;
    let api = Api::new(&profile.server_url, &profile.token)?;
    Ok(Session {
        profile: profile.clone(),
        config_dir,
        api,
    })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    let config_dir = cli.config_dir.clone().unwrap_or_else(default_config_dir);
    match &cli.command {
        Command::Profile(cmd) => {
            let mut profiles = Profiles::load(&config_dir)?;
            match cmd {
                ProfileCmd::Add {
                    name,
                    server,
                    token,
                    workers,
                    chunk_size,
                } => {
                    profiles.add(
                        name,
                        Profile {
                            server_url: server.clone(),
                            token: token.clone(),
                            workers: *workers,
                            chunk_size: *chunk_size,
                        },
                    );
                    profiles.save(&config_dir)?;
                }
                ProfileCmd::Use { name } => {
                    profiles.activate(name)?;
                    profiles.save(&config_dir)?;
                }
                ProfileCmd::List => {
                    let rows: Vec<_> = profiles
                        .profiles
                        .iter()
                        .map(|(name, p)| json!({"name": name, "server_url": p.server_url, "active": profiles.active.as_deref() == Some(name)}))
                        .collect();
                    emit(cli.json, &rows, || {
                        profiles
                            .profiles
                            .iter()
                            .map(|(name, p)| {
                                let mark = if profiles.active.as_deref() == Some(name) { "*" } else { " " };
                                format!("{mark} {name}\t{}\n", p.server_url)
                            })
                            .collect()
                    })?;
                }
            }
            Ok(0)
        }
        Command::Manifest(ManifestCmd::Create { dataset, paths }) => {
            let s = session(&cli)?;
            if paths.is_empty() {
                return Err(AgentError::Local("no paths given".into()));
            }
            let files = expand(paths)?;
            let dataset = ds::resolve(&s.api, dataset)?;
            let specs: Vec<_> = files.iter().map(|f| f.spec()).collect();
            let manifest: UploadManifest = s
                .api
                .post(&format!("/v1/datasets/{dataset}/manifests"), &json!({ "entries": specs }))?;
            let ledger = Ledger::new(manifest.id, manifest.dataset_id, &s.profile.server_url, &files);
            ledger.save(&ledger_dir(&s.config_dir))?;
            let out = json!({"manifest_id": manifest.id, "dataset_id": manifest.dataset_id, "entries": files.len()});
            emit(cli.json, &out, || format!("{}\n", manifest.id))?;
            Ok(0)
        }
        Command::Manifest(ManifestCmd::Show { manifest }) => {
            let s = session(&cli)?;
            let view: SyncView = s.api.get(&format!("/v1/manifests/{manifest}"))?;
            emit(cli.json, &view, || {
                view.entries
                    .iter()
                    .map(|e| format!("{}\t{:?}\t{}/{}\n", e.path, e.status, e.bytes_received, e.declared_size))
                    .collect()
            })?;
            Ok(0)
        }
        Command::Upload(args) => {
            let s = session(&cli)?;
            let opts = UploadOptions {
                workers: args.workers.or(s.profile.workers).unwrap_or(DEFAULT_WORKERS),
                chunk_size: args.chunk_size.or(s.profile.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE).max(1),
                retries: args.retries,
                ..UploadOptions::default()
            }
            .from_env();
            let summary = upload(&s.api, &ledger_dir(&s.config_dir), &args.manifest, &opts)?;
            emit(cli.json, &summary, || {
                format!(
                    "verified {} failed {} pending {} resumed_from_bytes {}\n",
                    summary.verified, summary.failed, summary.pending, summary.resumed_from_bytes
                )
            })?;
            Ok(if summary.complete { 0 } else { 3 })
        }
        Command::Download(args) => {
            let s = session(&cli)?;
            let api = s.api.clone().with_payer(args.payer.clone());
            let target = if args.target.starts_with("10.") {
                args.target.clone()
            } else {
                ds::resolve(&api, &args.target)?
            };
            let summary = download(&api, &target, args.version, &args.dest)?;
            emit(cli.json, &summary, || {
                format!(
                    "{} v{} ({}): {} files verified in {}\n",
                    summary.dataset_id,
                    summary.version,
                    summary.doi,
                    summary.files,
                    summary.dest.display()
                )
            })?;
            Ok(0)
        }
        Command::Ds(cmd) => {
            let s = session(&cli)?;
            match cmd {
                DsCmd::Ls { dataset } => {
                    let id = ds::resolve(&s.api, dataset)?;
                    let tree = ds::tree(&s.api, &id)?;
                    emit(cli.json, &tree, || ds::format_tree(&tree))?;
                }
                DsCmd::Mv {
                    dataset,
                    target,
                    destination,
                } => {
                    let id = ds::resolve(&s.api, dataset)?;
                    let tree = ds::move_node(&s.api, &id, target, destination)?;
                    emit(cli.json, &tree, || ds::format_tree(&tree))?;
                }
                DsCmd::Rename { dataset, target, name } => {
                    let id = ds::resolve(&s.api, dataset)?;
                    let tree = ds::rename(&s.api, &id, target, name)?;
                    emit(cli.json, &tree, || ds::format_tree(&tree))?;
                }
                DsCmd::Rm { dataset, target } => {
                    let id = ds::resolve(&s.api, dataset)?;
                    let tree = ds::remove(&s.api, &id, target)?;
                    emit(cli.json, &tree, || ds::format_tree(&tree))?;
                }
                DsCmd::Status { dataset, set } => {
                    let id = ds::resolve(&s.api, dataset)?;
                    let view = match set {
                        Some(label) => ds::set_status(&s.api, &id, label)?,
                        None => ds::show(&s.api, &id)?,
                    };
                    emit(cli.json, &view, || {
                        format!(
                            "{}\t{}\tlocked={}\n",
                            view["attributes"]["name"].as_str().unwrap_or(""),
                            view["status"].as_str().unwrap_or(""),
                            view["locked"]
                        )
                    })?;
                }
            }
            Ok(0)
        }
    }
}
