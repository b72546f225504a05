//! CSV emission with a `#`-prefixed JSON header line.

use std::io::Write;

use legendrian_core::C64;
use serde::Serialize;

/// `re±imi` with 17 significant digits in each part.
pub fn complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{sign}{:.16e}i", z.re, z.im.abs())
}

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct Header<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    seed: u64,
    config: &'a C,
}

/// A table of rows sharing one header.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render<C: Serialize>(
        &self,
        experiment: &str,
        seed: u64,
        config: &C,
    ) -> anyhow::Result<Vec<u8>> {
        let header = Header {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            experiment,
            seed,
            config,
        };
        let mut out = Vec::new();
        writeln!(out, "# {}", serde_json::to_string(&header)?)?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_format_round_trips() {
        for z in [C64::new(-0.01, 0.0), C64::new(1.0 / 3.0, -2.0e-17), C64::new(0.0, -0.0)] {
            let s = complex(z);
            let body = s.trim_end_matches('i');
            let b = body.as_bytes();
            let split = (1..b.len())
                .find(|&i| (b[i] == b'+' || b[i] == b'-') && b[i - 1] != b'e')
                .unwrap();
            let (re, im) = body.split_at(split);
            let re: f64 = re.parse().unwrap();
            let im: f64 = im.parse().unwrap();
            assert_eq!(re, z.re);
            assert_eq!(im.abs(), z.im.abs());
        }
        assert_eq!(complex(C64::new(-0.01, 0.0)), "-1.0000000000000000e-2+0.0000000000000000e0i");
    }
}
