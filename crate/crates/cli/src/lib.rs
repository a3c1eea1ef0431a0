//! Scenario runner for the combsense simulator: configuration files,
//! named experiments and their output artifacts.

pub mod artifacts;
pub mod config;
pub mod scenarios;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "COMBSENSE_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow::anyhow!("{THREADS_ENV}={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}
