use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use accesslens::annotation_qa::QaConfig;
use accesslens::detector::{DetectorConfig, DetectorMode};
use accesslens::{Error, Result};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "ACCESSLENS_";

/// Service settings, read from a TOML file and then overridden by
/// `ACCESSLENS_*` environment variables.
///
/// Relative paths in a file are taken relative to that file's directory.
/// `dictionary` and `mapping` fall back to the bundled data when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub port: u16,
    pub dictionary: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub storage_dir: PathBuf,
    pub max_upload_bytes: usize,
    pub detector: DetectorConfig,
    pub qa: QaConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1".into(),
            port: 8080,
            dictionary: None,
            mapping: None,
            storage_dir: PathBuf::from("scans"),
            max_upload_bytes: 10 * 1024 * 1024,
            detector: DetectorConfig::default(),
            qa: QaConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("{key}: cannot parse `{value}`")))
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "service config".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.dictionary, &mut self.mapping]
            .into_iter()
            .chain([&mut self.detector.path, &mut self.detector.ground_truth])
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.storage_dir);
    }

    /// Apply `ACCESSLENS_<KEY>` overrides. Nested detector keys use a
    /// `DETECTOR_` prefix (`ACCESSLENS_DETECTOR_MODE`), oracle knobs
    /// `DETECTOR_ORACLE_` (`ACCESSLENS_DETECTOR_ORACLE_SEED`), QA rules `QA_`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            self.set(&key.to_ascii_lowercase(), v.as_ref())?;
        }
        Ok(())
    }

    /// Set one key by its lower-case, underscore-joined path.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let d = &mut self.detector;
        let path = || Some(PathBuf::from(value));
        match key {
            "listen" => self.listen = value.to_string(),
            "port" => self.port = parse_num(key, value)?,
            "dictionary" => self.dictionary = path(),
            "mapping" => self.mapping = path(),
            "storage_dir" => self.storage_dir = PathBuf::from(value),
            "max_upload_bytes" => self.max_upload_bytes = parse_num(key, value)?,
            "detector_mode" => d.mode = value.parse::<DetectorMode>()?,
            "detector_endpoint" => d.endpoint = Some(value.to_string()),
            "detector_path" => d.path = path(),
            "detector_ground_truth" => d.ground_truth = path(),
            "detector_score_threshold" => d.score_threshold = parse_num(key, value)?,
            "detector_nms_iou" => {
                d.nms_iou = match value.trim() {
                    "" | "off" | "none" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "detector_timeout_secs" => d.timeout_secs = parse_num(key, value)?,
            "detector_oracle_drop_rate" => d.oracle.drop_rate = parse_num(key, value)?,
            "detector_oracle_jitter_pixels" => d.oracle.jitter_pixels = parse_num(key, value)?,
            "detector_oracle_score_noise" => d.oracle.score_noise = parse_num(key, value)?,
            "detector_oracle_seed" => d.oracle.seed = parse_num(key, value)?,
            "qa_fast_seconds" => self.qa.fast_seconds = parse_num(key, value)?,
            "qa_hit_quota" => self.qa.hit_quota = parse_num(key, value)?,
            other => return Err(invalid(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    pub fn socket_addr(&self) -> Result<SocketAddr> {
        format!("{}:{}", self.listen, self.port)
            .parse()
            .or_else(|_| format!("[{}]:{}", self.listen, self.port).parse())
            .map_err(|_| invalid(format!("bad listen address `{}`", self.listen)))
    }

    /// Checks that can run before anything is loaded.
    pub fn validate(&self) -> Result<()> {
        self.socket_addr()?;
        if !(self.qa.fast_seconds >= 0.0) {
            return Err(invalid("qa.fast_seconds must be non-negative"));
        }
        if self.max_upload_bytes == 0 {
            return Err(invalid("max_upload_bytes must be positive"));
        }
        self.detector.validate()?;
        for p in [&self.dictionary, &self.mapping, &self.detector.path, &self.detector.ground_truth]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(invalid(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
