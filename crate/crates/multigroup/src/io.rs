//! File formats.
//!
//! - Datasets: CSV with a header; the column named `y` is the label and every
//!   other column is a feature, in header order.
//! - Group files: CSV `id,lo,hi`, one closed interval on the first feature per
//!   line, ids `0..k` in any order.
//! - Results, traces and predictor dumps: CSV with fixed headers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back yields bit-identical values.

use std::fs;
use std::io::Write;
use std::path::Path;

use multigroup_core::learners::SleepingTrace;
use multigroup_core::theory::CertificateReport;
use multigroup_core::{Dataset, GroupFamily, Indicator, Record, RunTrace, UpdateChain};

use crate::error::{Error, Result};
use crate::experiments::ResultRow;

/// Column order of the results table.
pub const RESULT_COLUMNS: [&str; 13] = [
    "run_id",
    "method",
    "seed",
    "n",
    "lambda",
    "sigma",
    "eta",
    "criterion",
    "total_loss",
    "worst_group_loss",
    "worst_group_id",
    "num_updates",
    "wall_ms",
];

pub const TRACE_COLUMNS: [&str; 11] = [
    "iteration",
    "group",
    "hypothesis",
    "statistic",
    "threshold_noise",
    "chosen_noise",
    "max_abs_query_noise",
    "examined",
    "pre_loss",
    "post_loss",
    "accepted",
];

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("{what}: not a number: `{field}`"),
    })
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(Error::csv(path))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(Error::csv(path))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(Error::csv(path))?.clone();
    let y_col = header.iter().position(|h| h == "y").ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "no `y` column".into(),
    })?;
    if header.len() < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "need at least one feature column".into(),
        });
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(Error::csv(path))?;
        let line = i + 2;
        let mut x = Vec::with_capacity(header.len() - 1);
        let mut y = 0.0;
        for (k, field) in row.iter().enumerate() {
            let v = parse_f64(path, line, field, &header[k])?;
            if k == y_col {
                y = v;
            } else {
                x.push(v);
            }
        }
        records.push(Record::new(x, y));
    }
    if records.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "no records".into(),
        });
    }
    Ok(Dataset::new(records)?)
}

/// Writes `x` (one feature) or `x1, x2, ...` followed by `y`.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header: Vec<String> = if data.dim() == 1 {
        vec!["x".into()]
    } else {
        (1..=data.dim()).map(|k| format!("x{k}")).collect()
    };
    header.push("y".into());
    w.write_record(&header).map_err(Error::csv(path))?;
    for r in data.iter() {
        let mut row: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
        row.push(r.y.to_string());
        w.write_record(&row).map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn read_groups(path: impl AsRef<Path>) -> Result<GroupFamily> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(Error::csv(path))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "lo", "hi"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "expected header `id,lo,hi`".into(),
        });
    }
    let mut specs = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(Error::csv(path))?;
        let line = i + 2;
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let id: usize = row[0]
            .parse()
            .map_err(|_| bad(format!("id: not a count: `{}`", &row[0])))?;
        let lo = parse_f64(path, line, &row[1], "lo")?;
        let hi = parse_f64(path, line, &row[2], "hi")?;
        if !(lo <= hi) {
            return Err(bad(format!("empty interval [{lo}, {hi}]")));
        }
        specs.push((id, lo, hi, line));
    }
    specs.sort_by_key(|s| s.0);
    for (k, s) in specs.iter().enumerate() {
        if s.0 != k {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: s.3,
                msg: format!("group ids must be 0..{} without gaps or repeats", specs.len()),
            });
        }
    }
    let indicators = specs.iter().map(|s| Indicator::interval(s.1, s.2)).collect();
    Ok(GroupFamily::new(indicators)?)
}

pub fn write_groups(path: impl AsRef<Path>, groups: &[(f64, f64)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["id", "lo", "hi"]).map_err(Error::csv(path))?;
    for (id, (lo, hi)) in groups.iter().enumerate() {
        w.write_record([id.to_string(), lo.to_string(), hi.to_string()])
            .map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn result_record(r: &ResultRow) -> [String; 13] {
    [
        r.run_id.to_string(),
        r.method.name().to_string(),
        r.seed.to_string(),
        r.n.to_string(),
        opt(r.lambda),
        opt(r.sigma),
        opt(r.eta),
        r.criterion.name().to_string(),
        r.total_loss.to_string(),
        r.worst_group_loss.to_string(),
        opt(r.worst_group_id),
        r.num_updates.to_string(),
        r.wall_ms.to_string(),
    ]
}

pub fn write_results(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(RESULT_COLUMNS).map_err(Error::csv(path))?;
    for r in rows {
        w.write_record(result_record(r)).map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// One row per pass of the learner.
pub fn write_trace(path: impl AsRef<Path>, trace: &RunTrace) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(TRACE_COLUMNS).map_err(Error::csv(path))?;
    for (t, it) in trace.iterations.iter().enumerate() {
        let max_mu = it.query_noise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        w.write_record([
            t.to_string(),
            opt(it.chosen.map(|c| c.0)),
            opt(it.chosen.map(|c| c.1)),
            opt(it.statistic),
            it.threshold_noise.to_string(),
            opt(it.chosen_noise()),
            max_mu.to_string(),
            it.examined.to_string(),
            it.pre_loss.to_string(),
            it.post_loss.to_string(),
            u8::from(it.chosen.is_some()).to_string(),
        ])
        .map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

fn describe(ind: &Indicator) -> String {
    match ind {
        Indicator::All => "all".into(),
        Indicator::Interval { feature, lo, hi } => format!("x{feature} in [{lo}, {hi}]"),
        Indicator::HalfOpen { feature, lo, hi } => format!("x{feature} in [{lo}, {hi})"),
        Indicator::Custom(_) => "custom".into(),
    }
}

/// Update chain as a table: step 0 is the base predictor, later steps are the
/// updates in the order they were applied.
pub fn write_chain(path: impl AsRef<Path>, chain: &UpdateChain) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["step", "eta", "group_id", "group", "hypothesis_id", "value"])
        .map_err(Error::csv(path))?;
    w.write_record([
        "0".into(),
        String::new(),
        String::new(),
        "all".into(),
        chain.base.id.to_string(),
        opt(chain.base.constant_value()),
    ])
    .map_err(Error::csv(path))?;
    for (k, u) in chain.updates.iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            u.eta.to_string(),
            u.group.id.to_string(),
            describe(&u.group.indicator),
            u.hypothesis.id.to_string(),
            opt(u.hypothesis.constant_value()),
        ])
        .map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Final expert weights of a sleeping-experts run, one row per `(g, h)`.
pub fn write_sleeping(path: impl AsRef<Path>, trace: &SleepingTrace, hypotheses: usize) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["group_id", "hypothesis_id", "weight"])
        .map_err(Error::csv(path))?;
    for (k, wt) in trace.final_weights.iter().enumerate() {
        w.write_record([(k / hypotheses).to_string(), (k % hypotheses).to_string(), wt.to_string()])
            .map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Certificate as `key = value` lines.
pub fn format_certificate(c: &CertificateReport) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    kv("lambda", c.lambda.to_string());
    kv("alpha", c.alpha.to_string());
    kv("num_updates", c.num_updates.to_string());
    kv("max_abs_noise", c.max_abs_noise.to_string());
    kv("small_noise", c.small_noise.to_string());
    kv("update_cap", c.update_cap.to_string());
    kv("cap_holds", opt(c.cap_holds));
    kv("a", c.a.to_string());
    kv("xi_b", c.xi_b.to_string());
    kv("stopping_slack", c.stopping_slack.to_string());
    kv("slack_bound", c.slack_bound.to_string());
    kv("slack_holds", c.slack_holds.to_string());
    kv("noise_off", c.noise_off.to_string());
    kv("noise_off_cap_holds", opt(c.noise_off_cap_holds));
    s
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(text.as_bytes()).map_err(Error::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = Dataset::from_xy(&[0.1, 1.0 / 3.0, 2.5e-17], &[0.7, -0.0, 1e300]).unwrap();
        write_dataset(&p, &d).unwrap();
        assert_eq!(read_dataset(&p).unwrap().records(), d.records());
    }

    #[test]
    fn multi_feature_and_label_anywhere() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "y,x1,x2\n1,2,3\n4, 5 ,6\n").unwrap();
        let d = read_dataset(&p).unwrap();
        assert_eq!(d.get(1).x, vec![5.0, 6.0]);
        assert_eq!(d.get(1).y, 4.0);
    }

    #[test]
    fn dataset_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "x,y\n1,2\n1,oops\n").unwrap();
        let e = read_dataset(&p).unwrap_err().to_string();
        assert!(e.contains(":3:") && e.contains("oops"), "{e}");
        fs::write(&p, "x,z\n1,2\n").unwrap();
        assert!(read_dataset(&p).is_err());
        fs::write(&p, "x,y\n").unwrap();
        assert!(read_dataset(&p).is_err());
    }

    #[test]
    fn groups_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        fs::write(&p, "id,lo,hi\n1,0.5,1\n0,0,0.5\n").unwrap();
        let g = read_groups(&p).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.get(0).contains(&[0.5]) && g.get(1).contains(&[0.5]));
        assert!(!g.get(0).contains(&[0.6]));
        fs::write(&p, "id,lo,hi\n0,0,1\n2,0,1\n").unwrap();
        assert!(read_groups(&p).is_err());
        fs::write(&p, "id,lo,hi\n0,1,0\n").unwrap();
        assert!(read_groups(&p).is_err());
        write_groups(&p, &[(0.0, 0.25), (0.25, 1.0)]).unwrap();
        assert_eq!(read_groups(&p).unwrap().len(), 2);
    }
}
