//! Load scenario files: a header row of load-bus numbers, then one scenario
//! per row in MW. Columns may appear in any order.

use std::path::Path;

use crate::error::CliError;

fn input(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Input {
        path: path.into(),
        message: message.into(),
    }
}

/// Reads scenarios and reorders their columns to `load_buses`.
pub fn read_loads(path: &Path, load_buses: &[u32]) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    parse_loads(&text, load_buses).map_err(|m| input(path, m))
}

pub fn parse_loads(text: &str, load_buses: &[u32]) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let mut columns = Vec::with_capacity(header.len());
    for field in header.iter() {
        let number: u32 = field
            .trim_start_matches("bus")
            .parse()
            .map_err(|_| format!("header entry `{field}` is not a bus number"))?;
        let pos = load_buses
            .iter()
            .position(|&b| b == number)
            .ok_or_else(|| {
                format!("bus {number} is not a parametric load bus (load buses are {load_buses:?})")
            })?;
        if columns.contains(&pos) {
            return Err(format!("bus {number} appears twice in the header"));
        }
        columns.push(pos);
    }
    if columns.len() != load_buses.len() {
        let missing: Vec<u32> = (0..load_buses.len())
            .filter(|p| !columns.contains(p))
            .map(|p| load_buses[p])
            .collect();
        return Err(format!("header is missing load buses {missing:?}"));
    }

    let mut scenarios = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let mut load = vec![0.0; load_buses.len()];
        for (field, &pos) in record.iter().zip(&columns) {
            let value: f64 = field
                .parse()
                .map_err(|_| format!("scenario {row}: `{field}` is not a number"))?;
            if !value.is_finite() {
                return Err(format!("scenario {row}: load must be finite"));
            }
            load[pos] = value;
        }
        scenarios.push(load);
    }
    Ok(scenarios)
}
