//! CSV and JSON writers. Floats carry 17 significant digits so that every
//! value parses back to the identical `f64`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use policy_zoom_core::sim::RunResult;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{HarnessError, Result};
use crate::experiment::Aggregate;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Per-step trajectory: `t,reward_clipped,reward_raw,policy_id,episode_id`.
pub fn write_run_csv(path: &Path, run: &RunResult) -> Result<()> {
    let episodes = run.episode_ids();
    write_rows(
        path,
        &["t", "reward_clipped", "reward_raw", "policy_id", "episode_id"],
        (0..run.horizon()).map(|t| {
            [
                t.to_string(),
                fmt_f64(run.rewards[t]),
                fmt_f64(run.raw_rewards[t]),
                run.policy_ids[t].to_string(),
                episodes[t].to_string(),
            ]
        }),
    )
}

/// `t,mean_regret,stderr` for `t = 1..=T`.
pub fn write_aggregate_csv(path: &Path, agg: &Aggregate) -> Result<()> {
    write_curve_csv(path, &["t", "mean_regret", "stderr"], agg)
}

pub fn write_curve_csv(path: &Path, header: &[&str; 3], agg: &Aggregate) -> Result<()> {
    write_rows(
        path,
        header,
        agg.mean
            .iter()
            .zip(&agg.stderr)
            .enumerate()
            .map(|(i, (m, s))| [(i + 1).to_string(), fmt_f64(*m), fmt_f64(*s)]),
    )
}

/// Pretty JSON whose floats keep 17 significant digits.
struct Precise(PrettyFormatter<'static>);

impl Formatter for Precise {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_json_string(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

/// Reads a `t,value,stderr` curve.
pub fn read_curve_csv(path: &Path) -> Result<Aggregate> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut agg = Aggregate {
        mean: Vec::new(),
        stderr: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| HarnessError::Usage(format!("{}: malformed row {:?}", path.display(), rec)))
        };
        agg.mean.push(num(1)?);
        agg.stderr.push(num(2)?);
    }
    Ok(agg)
}

/// Roughly log-spaced 1-based steps up to `horizon`, at most `points` of them,
/// always including the last step.
pub fn log_spaced_steps(horizon: usize, points: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..points)
        .map(|i| {
            let f = i as f64 / (points.max(2) - 1) as f64;
            (horizon as f64).powf(f).round() as usize
        })
        .filter(|&t| t >= 1 && t <= horizon)
        .collect();
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

/// Plot-ready downsampling of every curve CSV under `dir`: for each
/// `<name>.csv` holding `t,value,stderr`, writes `plot_<name>.csv` with
/// `t,mean,ci_lo,ci_hi`. Returns the files written.
pub fn export_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&d)
            .map_err(|e| HarnessError::io(&d, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| HarnessError::io(&d, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if !(name == "aggregate.csv" || name == "relative_reward.csv") {
                continue;
            }
            let agg = read_curve_csv(&path)?;
            if agg.horizon() == 0 {
                continue;
            }
            let out = path.with_file_name(format!("plot_{name}"));
            write_rows(
                &out,
                &["t", "mean", "ci_lo", "ci_hi"],
                log_spaced_steps(agg.horizon(), 400).into_iter().map(|t| {
                    let (lo, hi) = agg.interval(t);
                    [t.to_string(), fmt_f64(agg.mean[t - 1]), fmt_f64(lo), fmt_f64(hi)]
                }),
            )?;
            written.push(out);
        }
    }
    written.sort();
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn steps_are_sorted_and_end_at_horizon() {
        let s = log_spaced_steps(100_000, 50);
        assert_eq!(s.first(), Some(&1));
        assert_eq!(s.last(), Some(&100_000));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_spaced_steps(1, 10), vec![1]);
    }
}
