//! Layered configuration: flags > `SAIBENCH_*` environment variables >
//! config file > built-in defaults.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    #[serde(default)]
    out_dir: Option<String>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    log_level: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub out_dir: PathBuf,
    /// Whether out_dir was set explicitly (flag, env, or config file)
    /// rather than falling back to the built-in default. A sweep plan's
    /// own output_dir only applies when this is false.
    pub out_dir_explicit: bool,
    pub workers: usize,
    pub format: OutputFormat,
    pub log_level: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl CliConfig {
    pub fn resolve(
        config_flag: Option<&str>,
        out_flag: Option<&str>,
        workers_flag: Option<usize>,
        format_flag: Option<&str>,
        log_flag: Option<&str>,
    ) -> Result<Self> {
        let config_path = config_flag
            .map(str::to_string)
            .or_else(|| env_var("SAIBENCH_CONFIG"));
        let file: FileConfig = match config_path {
            Some(path) => {
                let raw = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading config {path}"))?;
                serde_json::from_str(&raw).with_context(|| format!("parsing config {path}"))?
            }
            None => FileConfig::default(),
        };
        let explicit_out = out_flag
            .map(str::to_string)
            .or_else(|| env_var("SAIBENCH_OUT"))
            .or(file.out_dir);
        let out_dir_explicit = explicit_out.is_some();
        let out_dir = explicit_out.unwrap_or_else(|| "saibench_out".to_string());
        let workers = match workers_flag
            .or_else(|| env_var("SAIBENCH_WORKERS").and_then(|v| v.parse().ok()))
        {
            Some(w) => w,
            None => file.workers.unwrap_or(1),
        };
        if workers == 0 {
            bail!("workers must be >= 1");
        }
        let format = format_flag
            .map(str::to_string)
            .or_else(|| env_var("SAIBENCH_FORMAT"))
            .or(file.format)
            .unwrap_or_else(|| "text".to_string());
        let format = match format.as_str() {
            "text" => OutputFormat::Text,
            "json" => OutputFormat::Json,
            other => bail!("unknown format {other:?}; use text or json"),
        };
        let log_level = log_flag
            .map(str::to_string)
            .or_else(|| env_var("SAIBENCH_LOG"))
            .or(file.log_level)
            .unwrap_or_else(|| "warn".to_string());
        Ok(Self {
            out_dir: PathBuf::from(out_dir),
            out_dir_explicit,
            workers,
            format,
            log_level,
        })
    }
}
