//! Plain-text serialization shared by the engines and the command line.
//!
//! CSV files carry a single header line and a fixed column order. Floats are
//! written in scientific notation with 17 significant digits so that values
//! round-trip exactly.

use std::io::{self, Write};

use crate::params::TrajectoryRecord;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `n,value[,error]` rows.
pub fn write_record_csv<W: Write>(record: &TrajectoryRecord, mut w: W) -> io::Result<()> {
    match &record.errors {
        Some(errors) => {
            writeln!(w, "n,value,error")?;
            for ((t, v), e) in record.times.iter().zip(&record.values).zip(errors) {
                writeln!(w, "{t},{},{}", format_float(*v), format_float(*e))?;
            }
        }
        None => {
            writeln!(w, "n,value")?;
            for (t, v) in record.times.iter().zip(&record.values) {
                writeln!(w, "{t},{}", format_float(*v))?;
            }
        }
    }
    Ok(())
}

/// Generic table writer: header names and rows of floats.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], mut w: W) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format_float(*x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_float(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn seventeen_digits() {
        let s = format_float(1.0 / 3.0);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
    }
}
