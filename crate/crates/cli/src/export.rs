//! Plain-text exports: JSON-lines trajectories and CSV tables for clouds,
//! per-trial results, and batch summaries.
//!
//! Output is byte-stable: identical inputs produce identical bytes, because
//! every row is emitted in a fixed order and floats use the shortest
//! round-trip decimal form.

use std::io::{self, BufRead, Write};

use anyhow::Context;

use rodsim_core::environment::PointSource;
use rodsim_core::{SubStepRecord64, TrialRecord64};

use crate::runner::{BatchSummary, TrialRow};

/// Writes one JSON document per sub-step record.
pub fn write_trajectory<W: Write>(mut w: W, records: &[SubStepRecord64]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a trajectory back; blank lines are skipped.
pub fn read_trajectory<R: BufRead>(r: R) -> anyhow::Result<Vec<SubStepRecord64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).with_context(|| format!("trajectory line {}", i + 1))?,
        );
    }
    Ok(out)
}

fn source_label(source: PointSource) -> &'static str {
    match source {
        PointSource::Sensed => "sensed",
        PointSource::Inferred => "inferred",
    }
}

/// Writes both robots' final clouds as `x,y,owner,step,source` rows. Owners
/// are labeled by their initial role; the sources separate points a robot
/// sensed itself from points a leader decoded out of the follower's reaction.
pub fn write_clouds<W: Write>(mut w: W, record: &TrialRecord64) -> io::Result<()> {
    writeln!(w, "x,y,owner,step,source")?;
    for (index, cloud) in record.clouds.iter().enumerate() {
        let owner = if index == 0 { "leader" } else { "follower" };
        for p in cloud {
            writeln!(
                w,
                "{},{},{owner},{},{}",
                p.pos[0],
                p.pos[1],
                p.step,
                source_label(p.source)
            )?;
        }
    }
    Ok(())
}

/// Writes the flat per-trial table.
pub fn write_results<W: Write>(mut w: W, rows: &[TrialRow]) -> io::Result<()> {
    writeln!(w, "strategy,trial,seed,outcome,steps")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.strategy.label(), r.trial, r.seed, r.outcome, r.steps)?;
    }
    Ok(())
}

/// Writes the per-strategy outcome table: one column per strategy, one row
/// per feature. The step average covers collision-free trials and reads `NA`
/// when a strategy had none.
pub fn write_summary<W: Write>(mut w: W, summary: &BatchSummary) -> io::Result<()> {
    write!(w, "feature")?;
    for s in &summary.stats {
        write!(w, ",{}", s.strategy.label())?;
    }
    writeln!(w)?;

    write!(w, "success_pct")?;
    for s in &summary.stats {
        write!(w, ",{}", s.success_pct())?;
    }
    writeln!(w)?;

    write!(w, "collision_pct")?;
    for s in &summary.stats {
        write!(w, ",{}", s.collision_pct())?;
    }
    writeln!(w)?;

    write!(w, "timeout_pct")?;
    for s in &summary.stats {
        write!(w, ",{}", s.timeout_pct())?;
    }
    writeln!(w)?;

    write!(w, "avg_steps_cft")?;
    for s in &summary.stats {
        match s.mean_cft_steps {
            Some(m) => write!(w, ",{m}")?,
            None => write!(w, ",NA")?,
        }
    }
    writeln!(w)?;
    Ok(())
}
