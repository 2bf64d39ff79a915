use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] subwalk::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 domain or usage, 3 budget, 4 solver.
    pub fn exit_code(&self) -> u8 {
        use subwalk::Error as E;
        match self {
            CliError::Core(E::Budget { .. }) => 3,
            CliError::Core(E::Solver(_)) => 4,
            _ => 2,
        }
    }
}

/// Provenance written next to every output file.
#[derive(Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub subcommand: String,
    pub parameters: &'a P,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

pub struct Emitter {
    format: Format,
    out: Option<PathBuf>,
    text: String,
}

impl Emitter {
    pub fn new(format: Format, out: Option<PathBuf>) -> Self {
        Emitter {
            format,
            out,
            text: String::new(),
        }
    }

    /// JSON renders `whole`; CSV renders one record per row.
    pub fn emit<W: Serialize, R: Serialize>(&mut self, whole: &W, rows: &[R]) -> Result<(), CliError> {
        self.text = match self.format {
            Format::Json => serde_json::to_string_pretty(whole)? + "\n",
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r)?;
                }
                String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8")
            }
        };
        Ok(())
    }

    pub fn finish<P: Serialize>(&self, cli: &P) -> Result<(), CliError> {
        let Some(path) = &self.out else {
            print!("{}", self.text);
            return Ok(());
        };
        std::fs::write(path, &self.text)?;
        let params = serde_json::to_value(cli)?;
        let subcommand = params["command"]["subcommand"].as_str().unwrap_or_default().to_string();
        let seed = params["command"]["seed"].as_u64();
        let manifest = RunManifest {
            subcommand,
            parameters: &params,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs: vec![path.display().to_string()],
        };
        let mut sidecar = path.clone().into_os_string();
        sidecar.push(".manifest.json");
        std::fs::write(sidecar, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}
