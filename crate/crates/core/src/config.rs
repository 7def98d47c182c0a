//! Run configuration shared by the library entry points and the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::CountMode;
use crate::morph::{Locale, TextOptions};
use crate::scorer::TermSetMode;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "FANLEX_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Every knob that changes results. Serialized verbatim into reports.
///
/// The config file is TOML with the field names below as top-level keys, for
/// example `count_mode = "DOC_PRESENCE"` or `seed = 7`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub locale: Locale,
    pub count_mode: CountMode,
    pub term_set_mode: TermSetMode,
    pub smoothing: f64,
    pub seed: u64,
    pub include_title: bool,
    pub display_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            locale: Locale::Turkish,
            count_mode: CountMode::TokenFreq,
            term_set_mode: TermSetMode::Distinct,
            smoothing: 0.0,
            seed: 0,
            include_title: true,
            display_scale: 1.0,
        }
    }
}

impl RunConfig {
    pub fn text_options(&self) -> TextOptions {
        TextOptions {
            locale: self.locale,
            include_title: self.include_title,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.smoothing.is_finite() || self.smoothing < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "smoothing must be >= 0, got {}",
                self.smoothing
            )));
        }
        if !self.display_scale.is_finite() || self.display_scale <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "display_scale must be > 0, got {}",
                self.display_scale
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        Self::from_toml(&text, &display)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.count_mode, CountMode::TokenFreq);
        assert_eq!(cfg.term_set_mode, TermSetMode::Distinct);
        assert_eq!(cfg.smoothing, 0.0);
        assert!(cfg.include_title);
        assert_eq!(cfg.display_scale, 1.0);
        assert_eq!(RunConfig::from_toml("", "mem").unwrap(), cfg);
    }

    #[test]
    fn parses_partial_file() {
        let cfg = RunConfig::from_toml(
            "count_mode = \"DOC_PRESENCE\"\nseed = 7\nlocale = \"GENERIC\"\ndisplay_scale = 10000.0\n",
            "mem",
        )
        .unwrap();
        assert_eq!(cfg.count_mode, CountMode::DocPresence);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.locale, Locale::Generic);
        assert_eq!(cfg.term_set_mode, TermSetMode::Distinct);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("smoothing = -1.0", "mem").is_err());
        assert!(RunConfig::from_toml("display_scale = 0.0", "mem").is_err());
        assert!(RunConfig::from_toml("colour = \"red\"", "mem").is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig {
            seed: 42,
            smoothing: 0.25,
            ..RunConfig::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}
