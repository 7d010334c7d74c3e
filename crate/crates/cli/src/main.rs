use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use topicscope_core::bundle::{load_bundle, validate_bundle, Manifest, MANIFEST_FILE};
use topicscope_core::cache::{default_cache_path, CacheParams};
use topicscope_core::layout::{export_all, FigureOverrides, FIGURES_MANIFEST};
use topicscope_core::{Bundle, InterpretationCache};
use topicscope_server::{ServerOptions, HOST_ENV};

/// Environment variable naming a directory of dashboard assets for `serve`.
const STATIC_ENV: &str = "TOPICSCOPE_STATIC_DIR";
const DEFAULT_PORT: u16 = 8080;
const PACK_BUNDLE_DIR: &str = "bundle";
const PACK_BINARY: &str = "bin/topicscope";

#[derive(Parser)]
#[command(
    name = "topicscope",
    version,
    about = "Interpret topic models: validate, compute, serve and export figures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a bundle and print every issue found.
    Validate { bundle: PathBuf },
    /// Compute the interpretation cache at <bundle>/.cache/interpretation.json.
    Compute {
        bundle: PathBuf,
        #[command(flatten)]
        umap: UmapArgs,
    },
    /// Serve the JSON API and dashboard.
    Serve {
        bundle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Build all artifacts before accepting requests instead of on first use.
        #[arg(long)]
        precompute: bool,
    },
    /// Export every SVG figure and a figures manifest.
    Figures {
        bundle: PathBuf,
        out_dir: PathBuf,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        height: Option<f64>,
        /// Colors, one per line, or a JSON array of strings.
        #[arg(long)]
        palette_file: Option<PathBuf>,
    },
    /// Write a deployable directory: binary, bundle, cache and Dockerfile.
    Pack { bundle: PathBuf, out_dir: PathBuf },
}

#[derive(Args)]
struct UmapArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_neighbors: Option<usize>,
    #[arg(long)]
    min_dist: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

impl UmapArgs {
    fn params(&self) -> Result<CacheParams<f64>> {
        let mut p = CacheParams::default();
        if let Some(s) = self.seed {
            p.umap.seed = s;
        }
        if let Some(k) = self.n_neighbors {
            if k < 2 {
                bail!("--n-neighbors must be at least 2");
            }
            p.umap.n_neighbors = k;
        }
        if let Some(d) = self.min_dist {
            if !(d.is_finite() && d >= 0.0) {
                bail!("--min-dist must be a finite non-negative number");
            }
            p.umap.min_dist = d;
        }
        if let Some(e) = self.epochs {
            p.umap.epochs = Some(e);
        }
        Ok(p)
    }
}

/// ANSI styling, off when `NO_COLOR` is set or the stream is not a terminal.
#[derive(Clone, Copy)]
struct Style {
    color: bool,
}

impl Style {
    fn detect(terminal: bool) -> Self {
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Self {
            color: terminal && !no_color,
        }
    }

    fn paint(self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

fn load(dir: &Path) -> Result<Bundle> {
    let bundle: Bundle =
        load_bundle(dir).with_context(|| format!("cannot load bundle {}", dir.display()))?;
    let report = validate_bundle(&bundle);
    if !report.is_ok() {
        bail!("bundle {} is invalid:\n{report}", dir.display());
    }
    Ok(bundle)
}

/// The cache matching `bundle`, computed and saved when missing or stale.
fn cache_for(bundle: &Bundle, dir: &Path) -> Result<InterpretationCache> {
    let path = default_cache_path(dir);
    if let Ok(c) = InterpretationCache::load_for(&path, bundle) {
        return Ok(c);
    }
    let cache = InterpretationCache::build(bundle, &CacheParams::default())?;
    cache.save(&path)?;
    Ok(cache)
}

fn validate(dir: &Path) -> Result<bool> {
    let bundle: Bundle =
        load_bundle(dir).with_context(|| format!("cannot load bundle {}", dir.display()))?;
    let report = validate_bundle(&bundle);
    let style = Style::detect(std::io::stdout().is_terminal());
    for e in &report.errors {
        println!("{} {e}", style.paint("31", "error"));
    }
    for w in &report.warnings {
        println!("{} {w}", style.paint("33", "warning"));
    }
    println!(
        "{}: {} error(s), {} warning(s)",
        dir.display(),
        report.errors.len(),
        report.warnings.len()
    );
    Ok(report.is_ok())
}

fn compute(dir: &Path, umap: &UmapArgs) -> Result<()> {
    let params = umap.params()?;
    let bundle = load(dir)?;
    let cache = InterpretationCache::build(&bundle, &params)?;
    let path = default_cache_path(dir);
    cache.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn serve(dir: &Path, port: u16, precompute: bool) -> Result<()> {
    let options = ServerOptions {
        precompute,
        static_dir: std::env::var_os(STATIC_ENV).map(PathBuf::from),
        ..ServerOptions::default()
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(topicscope_server::run(dir, port, options, |addr| {
        eprintln!("serving {} on http://{addr}", dir.display());
    }))?;
    Ok(())
}

fn read_palette(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let colors: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)
            .with_context(|| format!("{}: expected a JSON array of strings", path.display()))?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect()
    };
    if colors.is_empty() {
        bail!("{}: palette is empty", path.display());
    }
    Ok(colors)
}

fn figures(
    dir: &Path,
    out: &Path,
    width: Option<f64>,
    height: Option<f64>,
    palette: Option<&Path>,
) -> Result<()> {
    for (flag, v) in [("--width", width), ("--height", height)] {
        if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
            bail!("{flag} must be a positive number");
        }
    }
    let overrides = FigureOverrides {
        width,
        height,
        palette: palette.map(read_palette).transpose()?,
        font_family: None,
    };
    let bundle = load(dir)?;
    let cache = cache_for(&bundle, dir)?;
    let manifest = export_all(&bundle, &cache, out, &overrides)?;
    for s in &manifest.skipped {
        eprintln!("skipped {}: {}", s.kind.as_str(), s.reason);
    }
    println!(
        "wrote {} figure(s) and {}",
        manifest.files.len(),
        out.join(FIGURES_MANIFEST).display()
    );
    Ok(())
}

fn dockerfile(port: u16) -> String {
    format!(
        "FROM debian:bookworm-slim\n\
         COPY {PACK_BINARY} /usr/local/bin/topicscope\n\
         COPY {PACK_BUNDLE_DIR} /srv/bundle\n\
         ENV {HOST_ENV}=0.0.0.0\n\
         EXPOSE {port}\n\
         CMD [\"topicscope\", \"serve\", \"/srv/bundle\", \"--port\", \"{port}\", \"--precompute\"]\n"
    )
}

fn copy_file(from: &Path, to: &Path) -> Result<()> {
    if let Some(parent) = to.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::copy(from, to)
        .with_context(|| format!("cannot copy {} to {}", from.display(), to.display()))?;
    Ok(())
}

fn pack(dir: &Path, out: &Path) -> Result<()> {
    let bundle = load(dir)?;
    let location = bundle.location.as_ref().expect("loaded from disk");
    let target = out.join(PACK_BUNDLE_DIR);
    let m: &Manifest = &location.manifest;
    let files = [
        Some(&m.vocabulary),
        Some(&m.topic_term),
        Some(&m.doc_topic),
        Some(&m.documents),
    ]
    .into_iter()
    .chain([m.doc_term.as_ref(), m.doc_embeddings.as_ref()])
    .flatten()
    .map(String::as_str)
    .chain([MANIFEST_FILE]);
    for name in files {
        copy_file(&dir.join(name), &target.join(name))?;
    }
    let names = location.topic_names_path();
    if names.exists() {
        copy_file(&names, &target.join(m.topic_names_file()))?;
    }
    // Copied byte for byte, so the content hash and any cache carry over.
    let packed: Bundle = load_bundle(&target)?;
    debug_assert_eq!(packed.content_hash(), bundle.content_hash());
    cache_for(&packed, &target)?;

    let exe = std::env::current_exe().context("cannot locate the topicscope binary")?;
    copy_file(&exe, &out.join(PACK_BINARY))?;
    std::fs::write(out.join("Dockerfile"), dockerfile(DEFAULT_PORT))?;
    println!("packed {} into {}", dir.display(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { bundle } => validate(&bundle),
        Command::Compute { bundle, umap } => compute(&bundle, &umap).map(|_| true),
        Command::Serve {
            bundle,
            port,
            precompute,
        } => serve(&bundle, port, precompute).map(|_| true),
        Command::Figures {
            bundle,
            out_dir,
            width,
            height,
            palette_file,
        } => figures(&bundle, &out_dir, width, height, palette_file.as_deref()).map(|_| true),
        Command::Pack { bundle, out_dir } => pack(&bundle, &out_dir).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let err_style = Style::detect(std::io::stderr().is_terminal());
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .with_ansi(err_style.color)
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{} {e:#}", err_style.paint("31", "error:"));
            ExitCode::from(1)
        }
    }
}
