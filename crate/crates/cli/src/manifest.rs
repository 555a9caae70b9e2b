//! Run manifests. The header lines are comments, so a manifest is itself a
//! valid configuration file and reproduces the run when passed to `--config`.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Config;

#[derive(Debug, Clone)]
pub struct Manifest {
    pub subcommand: String,
    pub controller: Option<String>,
    pub factors: Option<Vec<f64>>,
    pub config_path: Option<String>,
    pub out_dir: String,
    pub timestamp: String,
    pub snapshot: String,
    pub seed: u64,
}

impl Manifest {
    pub fn new(subcommand: &str, config: &Config, config_path: Option<&Path>, out_dir: &Path) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            controller: None,
            factors: None,
            config_path: config_path.map(|p| p.display().to_string()),
            out_dir: out_dir.display().to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            snapshot: config.snapshot(),
            seed: config.sim.seed,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# flexlink run manifest\n");
        let _ = writeln!(out, "# subcommand: {}", self.subcommand);
        if let Some(c) = &self.controller {
            let _ = writeln!(out, "# controller: {c}");
        }
        if let Some(f) = &self.factors {
            let list: Vec<String> = f.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "# factors: {}", list.join(","));
        }
        let _ = writeln!(out, "# config: {}", self.config_path.as_deref().unwrap_or("(built-in defaults)"));
        let _ = writeln!(out, "# out: {}", self.out_dir);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# created: {}", self.timestamp);
        out.push('\n');
        out.push_str(&self.snapshot);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_as_the_same_config() {
        let cfg = Config::parse("[sim]\nseed = 12\n[sliding]\nbeta = 0.9\n").unwrap();
        let mut m = Manifest::new("simulate", &cfg, Some(Path::new("run.ini")), Path::new("out"));
        m.controller = Some("composite".into());
        m.factors = Some(vec![1.0, 4.0]);
        let text = m.render();
        assert!(text.contains("# seed: 12"));
        assert!(text.contains("# controller: composite"));
        assert_eq!(Config::parse(&text).unwrap(), cfg);
    }
}
