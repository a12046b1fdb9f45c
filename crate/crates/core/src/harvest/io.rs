use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};

use super::{ActivitySchedule, HarvestTrace, IrradianceSeries};
use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim().trim_end_matches('Z');
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push((i + 1, line));
    }
    if lines.len() < 2 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "no data rows".into(),
        });
    }
    // drop the header row
    lines.remove(0);
    Ok(lines)
}

/// Reads `timestamp,ghi_w_m2` rows and averages samples into intervals.
///
/// The first interval starts at the first timestamp floored to an interval
/// boundary since midnight. Intervals without samples are a format error.
pub fn load_irradiance_csv(path: &Path, interval_seconds: f64) -> Result<IrradianceSeries> {
    if interval_seconds <= 0.0 {
        return Err(Error::argument("interval_seconds must be positive"));
    }
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut samples: Vec<(NaiveDateTime, f64)> = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let mut cols = line.split(',');
        let (Some(ts), Some(val), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(line_no, "expected `timestamp,ghi_w_m2`".into()));
        };
        let ts = parse_timestamp(ts)
            .ok_or_else(|| parse_err(line_no, format!("bad timestamp `{}`", ts.trim())))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad irradiance `{}`", val.trim())))?;
        if !(val >= 0.0) {
            return Err(parse_err(line_no, format!("negative irradiance {val}")));
        }
        if let Some(&(prev, _)) = samples.last() {
            if ts <= prev {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("timestamps not increasing at line {line_no}"),
                });
            }
        }
        samples.push((ts, val));
    }

    let first = samples[0].0;
    let secs_of_day = first.num_seconds_from_midnight() as f64;
    let floored = secs_of_day - secs_of_day.rem_euclid(interval_seconds);
    let start = first.date().and_hms_opt(0, 0, 0).expect("midnight exists")
        + Duration::milliseconds((floored * 1000.0) as i64);

    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (ts, val) in samples {
        let offset = (ts - start).num_milliseconds() as f64 / 1000.0;
        let bucket = (offset / interval_seconds).floor() as usize;
        if sums.len() <= bucket {
            sums.resize(bucket + 1, (0.0, 0));
        }
        sums[bucket].0 += val;
        sums[bucket].1 += 1;
    }
    let mut values = Vec::with_capacity(sums.len());
    for (i, (sum, n)) in sums.into_iter().enumerate() {
        if n == 0 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("no samples for interval {i}"),
            });
        }
        values.push(sum / n as f64);
    }
    Ok(IrradianceSeries {
        start,
        interval_seconds,
        values_w_m2: values,
    })
}

pub fn write_irradiance_csv<W: Write>(series: &IrradianceSeries, mut w: W) -> Result<()> {
    writeln!(w, "timestamp,ghi_w_m2")?;
    for (i, v) in series.values_w_m2.iter().enumerate() {
        let ts = series.start
            + Duration::milliseconds((i as f64 * series.interval_seconds * 1000.0) as i64);
        writeln!(w, "{},{}", ts.format(TIMESTAMP_FORMAT), v)?;
    }
    Ok(())
}

pub fn write_harvest_csv<W: Write>(trace: &HarvestTrace, mut w: W) -> Result<()> {
    writeln!(w, "interval_index,harvest_j")?;
    for (i, v) in trace.values_j.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

/// Reads `interval_index,harvest_j`; the caller supplies timing metadata.
pub fn read_harvest_csv(
    path: &Path,
    interval_seconds: f64,
    start: NaiveDateTime,
) -> Result<HarvestTrace> {
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut values = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, "expected `interval_index,harvest_j`".into()))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad index `{idx}`")))?;
        if idx != values.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("expected interval {} at line {line_no}, got {idx}", values.len()),
            });
        }
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad harvest `{val}`")))?;
        if !(val >= 0.0) {
            return Err(parse_err(line_no, format!("negative harvest {val}")));
        }
        values.push(val);
    }
    HarvestTrace::new(values, interval_seconds, start)
}

pub fn write_activity_csv<W: Write>(schedule: &ActivitySchedule, mut w: W) -> Result<()> {
    writeln!(w, "timestamp,activity,location,daytype")?;
    for t in 0..schedule.len() {
        writeln!(
            w,
            "{},{},{},{}",
            schedule.timestamp(t).format(TIMESTAMP_FORMAT),
            schedule.labels[t],
            if schedule.outdoor[t] { "outdoor" } else { "indoor" },
            if schedule.is_weekend_at(t) { "weekend" } else { "weekday" },
        )?;
    }
    Ok(())
}

pub fn read_activity_csv(
    path: &Path,
    interval_seconds: f64,
    intervals_per_day: usize,
) -> Result<ActivitySchedule> {
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut start = None;
    let mut labels = Vec::new();
    let mut outdoor = Vec::new();
    let mut weekend = Vec::new();
    let mut prev: Option<NaiveDateTime> = None;
    for (line_no, line) in data_lines(path)? {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(parse_err(
                line_no,
                "expected `timestamp,activity,location,daytype`".into(),
            ));
        }
        let ts = parse_timestamp(cols[0])
            .ok_or_else(|| parse_err(line_no, format!("bad timestamp `{}`", cols[0])))?;
        if prev.is_some_and(|p| ts <= p) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("timestamps not increasing at line {line_no}"),
            });
        }
        prev = Some(ts);
        start.get_or_insert(ts);
        labels.push(
            cols[1]
                .parse()
                .map_err(|e: Error| parse_err(line_no, e.to_string()))?,
        );
        outdoor.push(match cols[2] {
            "outdoor" => true,
            "indoor" => false,
            other => return Err(parse_err(line_no, format!("bad location `{other}`"))),
        });
        let is_weekend = match cols[3] {
            "weekend" => true,
            "weekday" => false,
            other => return Err(parse_err(line_no, format!("bad daytype `{other}`"))),
        };
        if (labels.len() - 1) % intervals_per_day == 0 {
            weekend.push(is_weekend);
        }
    }
    Ok(ActivitySchedule {
        start: start.expect("at least one row"),
        interval_seconds,
        intervals_per_day,
        labels,
        outdoor,
        weekend,
    })
}
