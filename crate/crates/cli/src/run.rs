//! Per-invocation state: output directory, config hash and check results.

use std::path::{Path, PathBuf};

use aqec_core::io::{config_hash, write_json, Table, TOOLKIT_VERSION};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub measured: String,
    pub pass: bool,
}

pub struct Run {
    pub experiment: &'static str,
    pub out: PathBuf,
    pub hash: String,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

impl Run {
    /// Hashes the effective configuration and creates the output directory,
    /// `runs/<experiment>-<hash prefix>` unless one is given.
    pub fn new<T: Serialize>(experiment: &'static str, config: &T, out: Option<&Path>) -> Result<Self, CliError> {
        let hash = config_hash(config)?;
        let out = match out {
            Some(p) => p.to_path_buf(),
            None => PathBuf::from("runs").join(format!("{experiment}-{}", &hash[..12])),
        };
        std::fs::create_dir_all(&out)?;
        write_json(&out.join("config.json"), config)?;
        Ok(Self {
            experiment,
            out,
            hash,
            checks: Vec::new(),
            files: vec!["config.json".into()],
        })
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        table.write_csv(&self.out.join(name), &self.hash)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        write_json(&self.out.join(name), value)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        expected: impl Into<String>,
        measured: impl Into<String>,
        pass: bool,
    ) {
        self.checks.push(Check {
            name: name.into(),
            expected: expected.into(),
            measured: measured.into(),
            pass,
        });
    }

    /// `|measured − target| ≤ tol`.
    pub fn check_close(&mut self, name: impl Into<String>, measured: f64, target: f64, tol: f64) {
        self.check(
            name,
            format!("{target} ± {tol}"),
            format!("{measured:.4}"),
            (measured - target).abs() <= tol,
        );
    }

    /// Writes `summary.json`, prints the check table and, in check mode,
    /// turns misses into an error.
    pub fn finish<T: Serialize>(mut self, summary: T, check_mode: bool) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            experiment: &'a str,
            version: &'a str,
            config_hash: &'a str,
            summary: T,
            checks: &'a [Check],
            files: &'a [String],
        }
        self.files.push("summary.json".into());
        let env = Envelope {
            experiment: self.experiment,
            version: TOOLKIT_VERSION,
            config_hash: &self.hash,
            summary,
            checks: &self.checks,
            files: &self.files,
        };
        write_json(&self.out.join("summary.json"), &env)?;
        println!(
            "{}: wrote {} files to {}",
            self.experiment,
            self.files.len(),
            self.out.display()
        );
        for c in &self.checks {
            let mark = if c.pass { "ok  " } else { "MISS" };
            println!("  [{mark}] {}: {} (expected {})", c.name, c.measured, c.expected);
        }
        let missed = self.checks.iter().filter(|c| !c.pass).count();
        if check_mode && missed > 0 {
            return Err(CliError::CheckMiss(missed));
        }
        Ok(())
    }
}
