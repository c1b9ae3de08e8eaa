use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CSV header of trajectory logs, in column order.
pub const CSV_COLUMNS: [&str; 19] = [
    "t",
    "x_c",
    "y_c",
    "theta_c",
    "theta1",
    "theta2",
    "v_c",
    "omega_c",
    "v0",
    "omega0",
    "e_x",
    "e_y",
    "e_theta",
    "xi_hat_theta1",
    "xi_hat_theta2",
    "xi_hat_r",
    "tau_theta1",
    "tau_theta2",
    "tau_r",
];

/// One logged step, SI units (m, rad, s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRow {
    pub t: f64,
    pub x_c: f64,
    pub y_c: f64,
    pub theta_c: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub v_c: f64,
    pub omega_c: f64,
    pub v0: f64,
    pub omega0: f64,
    /// Cart error in the reference frame: along, lateral, heading.
    pub e_x: f64,
    pub e_y: f64,
    pub e_theta: f64,
    pub xi_hat_theta1: f64,
    pub xi_hat_theta2: f64,
    pub xi_hat_r: f64,
    /// Generalized force applied on `(θ1, θ2, R)`.
    pub tau_theta1: f64,
    pub tau_theta2: f64,
    pub tau_r: f64,
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidParameter(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(rows: &[LogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
}

/// Reads a log, rejecting any header other than [`CSV_COLUMNS`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::InvalidParameter(format!(
            "unexpected log header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_documented_columns() {
        let mut buf = Vec::new();
        write_csv(&[LogRow::default()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn rows_round_trip_exactly() {
        let rows: Vec<LogRow> = (0..5)
            .map(|k| LogRow {
                t: k as f64 * 1e-3,
                x_c: 1.0 / 3.0 + k as f64,
                e_theta: -std::f64::consts::PI / 7.0,
                tau_r: 1e-300,
                ..Default::default()
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn foreign_header_is_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
