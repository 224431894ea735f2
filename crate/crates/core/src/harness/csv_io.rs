use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use super::HarnessError;
use crate::estimators::{ErrorStats, EstimatorRun};
use crate::observation::TraversalObservation;

pub const SERIES_HEADER: [&str; 4] = ["t", "arc", "agv", "duration"];
pub const ESTIMATE_HEADER: [&str; 4] = ["t", "observed", "predicted", "residual"];

fn writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn internal(e: csv::Error) -> HarnessError {
    HarnessError::Internal(format!("csv encoding failed: {e}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn series_to_csv(series: &[TraversalObservation]) -> Result<Vec<u8>, HarnessError> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(SERIES_HEADER).map_err(internal)?;
        for o in series {
            w.write_record([
                o.start_time.to_string(),
                o.arc.to_string(),
                o.agv.to_string(),
                o.duration.to_string(),
            ])
            .map_err(internal)?;
        }
        w.flush()
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
    }
    Ok(buf)
}

fn field<'r>(rec: &'r StringRecord, i: usize, line: u64) -> Result<&'r str, HarnessError> {
    rec.get(i).ok_or_else(|| {
        HarnessError::Input(format!(
            "series row at line {line}: missing field {}",
            SERIES_HEADER[i]
        ))
    })
}

fn number(rec: &StringRecord, i: usize, line: u64) -> Result<f64, HarnessError> {
    let raw = field(rec, i, line)?;
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            HarnessError::Input(format!(
                "series row at line {line}: {} '{raw}' is not a finite number",
                SERIES_HEADER[i]
            ))
        })
}

/// Parses a `t,arc,agv,duration` series. Lines starting with `#` are skipped.
pub fn series_from_csv(text: &str) -> Result<Vec<TraversalObservation>, HarnessError> {
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| HarnessError::Input(format!("series header: {e}")))?;
    if header.iter().ne(SERIES_HEADER) {
        return Err(HarnessError::Input(format!(
            "series header must be '{}', found '{}'",
            SERIES_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            HarnessError::Input(format!("series row at line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != SERIES_HEADER.len() {
            return Err(HarnessError::Input(format!(
                "series row at line {line}: expected 4 fields, found {}",
                rec.len()
            )));
        }
        let duration = number(&rec, 3, line)?;
        if duration <= 0.0 {
            return Err(HarnessError::Input(format!(
                "series row at line {line}: duration must be positive"
            )));
        }
        out.push(TraversalObservation {
            start_time: number(&rec, 0, line)?,
            arc: field(&rec, 1, line)?.into(),
            agv: field(&rec, 2, line)?.into(),
            duration,
        });
    }
    Ok(out)
}

pub fn stats_comment(stats: Option<&ErrorStats>) -> String {
    match stats {
        Some(s) => format!(
            "# rmse={}, std={}, mean={}\n",
            s.rmse, s.std_dev, s.mean_error
        ),
        None => "# rmse=, std=, mean=\n".to_string(),
    }
}

/// `t,observed,predicted,residual` rows followed by the stats comment.
pub fn estimates_to_csv(
    series: &[TraversalObservation],
    run: &EstimatorRun,
) -> Result<Vec<u8>, HarnessError> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(ESTIMATE_HEADER).map_err(internal)?;
        for (o, p) in series.iter().zip(&run.predictions) {
            w.write_record([
                o.start_time.to_string(),
                o.duration.to_string(),
                opt(*p),
                opt(p.map(|p| o.duration - p)),
            ])
            .map_err(internal)?;
        }
        w.flush()
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
    }
    buf.extend_from_slice(stats_comment(run.stats.as_ref()).as_bytes());
    Ok(buf)
}
