//! Plot-ready convergence curves as CSV with the header
//! `arm,n_consumed,err_1nn,ber_estimate`.

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::knn::CurvePoint;

pub const CURVES_HEADER: [&str; 4] = ["arm", "n_consumed", "err_1nn", "ber_estimate"];

/// Points of one arm, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub arm: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    arm: String,
    n_consumed: usize,
    err_1nn: f64,
    ber_estimate: f64,
}

pub fn curves_to_csv_string(series: &[CurveSeries]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CURVES_HEADER).expect("in-memory write");
    for s in series {
        for p in &s.points {
            w.serialize(Row {
                arm: s.arm.clone(),
                n_consumed: p.n_consumed,
                err_1nn: p.err_1nn,
                ber_estimate: p.ber_estimate,
            })
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

/// Parses curves CSV. Series are returned in order of first appearance;
/// within a series `n_consumed` must strictly increase.
pub fn parse_curves_csv(text: &str) -> Result<Vec<CurveSeries>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Malformed(format!("curves csv: {e}")))?
        .clone();
    if headers.iter().ne(CURVES_HEADER) {
        return Err(DataError::Malformed(format!(
            "curves csv header must be {}, got {}",
            CURVES_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut series: Vec<CurveSeries> = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| DataError::Malformed(format!("curves csv line {line}: {e}")))?;
        if !(row.err_1nn.is_finite() && (0.0..=1.0).contains(&row.err_1nn)) {
            return Err(DataError::Malformed(format!(
                "curves csv line {line}: err_1nn {} outside [0, 1]",
                row.err_1nn
            )));
        }
        if !row.ber_estimate.is_finite() {
            return Err(DataError::Malformed(format!(
                "curves csv line {line}: non-finite ber_estimate"
            )));
        }
        let point = CurvePoint {
            n_consumed: row.n_consumed,
            err_1nn: row.err_1nn,
            ber_estimate: row.ber_estimate,
        };
        match series.iter_mut().find(|s| s.arm == row.arm) {
            Some(s) => {
                let last = s.points.last().expect("series are created non-empty").n_consumed;
                if point.n_consumed <= last {
                    return Err(DataError::Malformed(format!(
                        "curves csv line {line}: n_consumed {} does not increase for arm {}",
                        point.n_consumed, row.arm
                    )));
                }
                s.points.push(point);
            }
            None => series.push(CurveSeries {
                arm: row.arm,
                points: vec![point],
            }),
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, e: f64) -> CurvePoint {
        CurvePoint {
            n_consumed: n,
            err_1nn: e,
            ber_estimate: e / 2.0,
        }
    }

    #[test]
    fn round_trip_keeps_full_precision() {
        let s = vec![
            CurveSeries {
                arm: "raw".into(),
                points: vec![p(10, 0.1 + 0.2), p(20, 1.0 / 3.0)],
            },
            CurveSeries {
                arm: "with,comma".into(),
                points: vec![p(5, 0.5)],
            },
        ];
        assert_eq!(parse_curves_csv(&curves_to_csv_string(&s)).unwrap(), s);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(parse_curves_csv("a,b,c,d\n").is_err());
        assert!(parse_curves_csv("arm,n_consumed,err_1nn,ber_estimate\nx,10,1.5,0\n").is_err());
        assert!(parse_curves_csv("arm,n_consumed,err_1nn,ber_estimate\nx,10,0.5,0\nx,10,0.4,0\n").is_err());
        assert!(parse_curves_csv("arm,n_consumed,err_1nn,ber_estimate\nx,-1,0.5,0\n").is_err());
        assert_eq!(
            parse_curves_csv("arm,n_consumed,err_1nn,ber_estimate\n").unwrap(),
            vec![]
        );
    }
}
