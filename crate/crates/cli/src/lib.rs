//! Command-line driver: experiment configs, execution and output files.
//!
//! Every run writes into a fresh directory named after the experiment and a
//! hash of its resolved configuration, so repeated runs never overwrite each
//! other. Tables do not depend on the number of worker threads.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{ConfigFile, Experiment, Grid};
pub use experiments::render;
pub use output::{table_csv, Outputs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Library(#[from] perc_chem::Error),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    /// An inner check failed after the outputs were written.
    #[error("invariant violation: {0}")]
    Violation(String),
}

/// 0 ok, 1 I/O, 2 config or parameters, 3 geometry or margin, 4 invariant
/// violation, 5 resource budget.
pub fn exit_code(e: &CliError) -> i32 {
    use perc_chem::Error as E;
    match e {
        CliError::Config(_) => 2,
        CliError::Io { .. } => 1,
        CliError::Violation(_) => 4,
        CliError::Library(inner) => match inner {
            E::Parameter(_) | E::Precondition(_) | E::Refused(_) => 2,
            E::Geometry(_) => 3,
            E::InvariantViolation(_) | E::Certification(_) => 4,
            E::Resource { .. } => 5,
        },
    }
}

/// Renders on a pool of `workers` threads (the global pool when `None`).
pub fn render_with(experiment: Experiment, workers: Option<usize>) -> Result<Outputs, CliError> {
    perc_chem::exec::with_workers(workers, || render(experiment))
}

/// Merges the config file under the flags, runs, and writes the outputs.
/// Returns the output directory; an inner check failure is reported as
/// [`CliError::Violation`] after the files are on disk.
pub fn run(experiment: Experiment, config: Option<&ConfigFile>, root: &Path, workers: Option<usize>) -> Result<PathBuf, CliError> {
    let experiment = match config {
        Some(c) => c.apply(experiment)?,
        None => experiment,
    };
    let out = render_with(experiment, workers)?;
    let dir = out.write(root)?;
    log::info!("wrote {}", dir.display());
    match out.violation {
        Some(msg) => Err(CliError::Violation(format!("{msg} (outputs in {})", dir.display()))),
        None => Ok(dir),
    }
}

#[cfg(test)]
mod tests {
    use super::config::*;
    use super::*;

    fn small_tail() -> Experiment {
        Experiment::Tail(TailArgs {
            p: Some(Grid(vec![0.65, 0.8])),
            k: Some(Grid(vec![2.0])),
            dist: Some(6),
            t: Some(Grid(vec![3.0, 4.0, 5.0, 6.0])),
            n: Some(400),
            seed: Some(7),
            ..TailArgs::default()
        })
    }

    #[test]
    fn outputs_do_not_depend_on_workers() {
        for e in [
            small_tail(),
            Experiment::Lipschitz(LipschitzArgs { dist: Some(8), p: Some(Grid(vec![0.7, 0.85, 1.0])), n: Some(60), ..Default::default() }),
            Experiment::Animal(AnimalArgs { length: Some(5), n: Some(30), ..Default::default() }),
        ] {
            let a = render_with(e.clone(), Some(1)).unwrap();
            let b = render_with(e.clone(), Some(1)).unwrap();
            let c = render_with(e, Some(3)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.files, c.files);
            assert_eq!(a.manifest(), c.manifest());
        }
    }

    #[test]
    fn same_spec_twice_gives_identical_directories() {
        let root = tempfile::tempdir().unwrap();
        let a = run(small_tail(), None, root.path(), Some(1)).unwrap();
        let b = run(small_tail(), None, root.path(), Some(2)).unwrap();
        assert_ne!(a, b);
        for name in ["joint.csv", "conditional.csv", "manifest.json"] {
            assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        }
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let geometry = render(Experiment::Tail(TailArgs { radius: Some(30), ..TailArgs::default() })).unwrap_err();
        assert_eq!(exit_code(&geometry), 3);
        assert!(geometry.to_string().contains("L >= 40"), "{geometry}");
        let refused = render(Experiment::Animal(AnimalArgs { length: Some(13), ..Default::default() })).unwrap_err();
        assert_eq!(exit_code(&refused), 2);
        let parameter = render(Experiment::Lipschitz(LipschitzArgs { p: Some(Grid(vec![0.9, 0.8])), dist: Some(4), ..Default::default() })).unwrap_err();
        assert_eq!(exit_code(&parameter), 2);
        let huge = render(Experiment::ExportGraph(ExportArgs { dim: Some(6), radius: Some(400), ..Default::default() })).unwrap_err();
        assert_eq!(exit_code(&huge), 5);
        assert_eq!(exit_code(&CliError::Violation(String::new())), 4);
        assert_eq!(exit_code(&"[tail]\nn = -1\n".parse::<ConfigFile>().unwrap_err()), 2);
    }

    #[test]
    fn coarse_check_reports_zero_violations() {
        let out = render(Experiment::CoarseCheck(CoarseCheckArgs { radius: Some(80), scales: Some(Grid(vec![60.0])), pairs: Some(10), ..Default::default() })).unwrap();
        assert!(out.violation.is_none());
        let csv = String::from_utf8(out.files["coarse.csv"].clone()).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(&row[4..7], &["0", "0", "0"]);
    }

    #[test]
    fn russo_and_export_run() {
        let out = render(Experiment::Russo(RussoArgs { host: Some(RussoHost::Star), observable: Some(Observable::Clusters), p: None })).unwrap();
        assert!(out.violation.is_none());
        let out = render(Experiment::ExportGraph(ExportArgs { p: Some(0.5), ..Default::default() })).unwrap();
        let text = String::from_utf8(out.files["region.txt"].clone()).unwrap();
        let parsed = perc_chem::region::parse_region_text(&text).unwrap();
        assert_eq!(parsed.coords.len(), 25);
        assert!(parsed.open_edges.is_some());
    }
}
