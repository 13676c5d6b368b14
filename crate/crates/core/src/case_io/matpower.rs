//! Reader for the subset of the MATPOWER case format used by DC OPF.
//!
//! Recognized statements (anything else is skipped):
//!
//! ```text
//! function mpc = <name>
//! mpc.baseMVA = <number>;
//! mpc.bus = [ ... ];        bus_i type Pd ...
//! mpc.gen = [ ... ];        bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin ...
//! mpc.branch = [ ... ];     fbus tbus r x b rateA rateB rateC ratio angle status ...
//! mpc.gencost = [ ... ];    model startup shutdown n c(n-1) ... c0   (model 2 only, n <= 3)
//! mpc.genfuel = { 'ng'; 'coal'; ... };        optional, one label per gen row
//! mpc.load_buses = [ 4 5 9 ];                 optional, parametric load bus numbers
//! ```
//!
//! Rows end at `;` or a newline and `%` starts a comment. A `rateA` of 0
//! means the branch is unconstrained.

use std::collections::HashMap;

use log::{info, warn};

use crate::grid::{Branch, Bus, Generator, Network};

use super::CaseError;

/// One numeric row of a matrix block, with the source line it started on.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub line: usize,
    pub values: Vec<f64>,
}

/// Raw matrices as read from a case file, before interpretation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseFileSubset {
    pub name: String,
    pub base_mva: f64,
    pub bus: Vec<Row>,
    pub gen: Vec<Row>,
    pub branch: Vec<Row>,
    pub gencost: Vec<Row>,
    pub genfuel: Option<Vec<String>>,
    pub load_buses: Option<Vec<u32>>,
}

/// Parses case text into a [`Network`].
pub fn parse_matpower_case(text: &str) -> Result<Network, CaseError> {
    read_case_subset(text)?.into_network()
}

/// Tokenizes case text into its raw matrix blocks.
pub fn read_case_subset(text: &str) -> Result<CaseFileSubset, CaseError> {
    let lines: Vec<(usize, String)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).to_string()))
        .collect();

    let mut case = CaseFileSubset {
        base_mva: 100.0,
        ..Default::default()
    };
    let mut blocks: HashMap<String, Vec<Row>> = HashMap::new();
    let mut i = 0;
    while i < lines.len() {
        let (lineno, line) = &lines[i];
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("function") {
            if let Some((_, name)) = rest.split_once('=') {
                case.name = name.trim().trim_end_matches(';').to_string();
            }
            i += 1;
            continue;
        }
        let Some(rest) = trimmed.strip_prefix("mpc.") else {
            i += 1;
            continue;
        };
        let Some((field, value)) = rest.split_once('=') else {
            return Err(CaseError::Syntax {
                line: *lineno,
                message: format!("expected `=` in `{trimmed}`"),
            });
        };
        let field = field.trim().to_string();
        let value = value.trim();
        if value.starts_with('[') {
            let (body, end) = collect_until(&lines, i, '[', ']')?;
            blocks.insert(field, parse_matrix(&body)?);
            i = end + 1;
        } else if value.starts_with('{') {
            let (body, end) = collect_until(&lines, i, '{', '}')?;
            if field == "genfuel" {
                case.genfuel = Some(parse_cell_strings(&body));
            }
            i = end + 1;
        } else {
            if field == "baseMVA" {
                let token = value.trim_end_matches(';').trim();
                case.base_mva = parse_number(token, *lineno)?;
            }
            i += 1;
        }
    }

    let mut take = |name: &'static str| blocks.remove(name).ok_or(CaseError::MissingBlock(name));
    case.bus = take("bus")?;
    case.gen = take("gen")?;
    case.branch = take("branch")?;
    case.gencost = take("gencost")?;
    if let Some(rows) = blocks.remove("load_buses") {
        let mut numbers = Vec::new();
        for row in rows {
            for v in row.values {
                numbers.push(as_bus_number(v, row.line)?);
            }
        }
        case.load_buses = Some(numbers);
    }
    Ok(case)
}

impl CaseFileSubset {
    /// Interprets the raw blocks as a DC network.
    pub fn into_network(self) -> Result<Network, CaseError> {
        check_width("bus", &self.bus, 3)?;
        check_width("gen", &self.gen, 10)?;
        check_width("branch", &self.branch, 4)?;
        check_width("gencost", &self.gencost, 4)?;
        if self.gencost.len() < self.gen.len() {
            return Err(CaseError::Inconsistent(format!(
                "{} gen rows but only {} gencost rows",
                self.gen.len(),
                self.gencost.len()
            )));
        }
        if self.gencost.len() > self.gen.len() {
            info!(
                "ignoring {} reactive-power gencost rows",
                self.gencost.len() - self.gen.len()
            );
        }
        if let Some(fuels) = &self.genfuel {
            if fuels.len() != self.gen.len() {
                return Err(CaseError::Inconsistent(format!(
                    "{} genfuel entries for {} gen rows",
                    fuels.len(),
                    self.gen.len()
                )));
            }
        }

        let mut buses = Vec::new();
        let mut index_of = HashMap::new();
        for row in &self.bus {
            let number = as_bus_number(row.values[0], row.line)?;
            let kind = row.values[1];
            if kind == 4.0 {
                info!("dropping isolated bus {number}");
                continue;
            }
            if index_of.insert(number, buses.len()).is_some() {
                return Err(CaseError::Syntax {
                    line: row.line,
                    message: format!("duplicate bus number {number}"),
                });
            }
            buses.push(Bus {
                number,
                demand: row.values[2],
                is_load: row.values[2] > 0.0,
                is_reference: kind == 3.0,
            });
        }
        if self.bus.iter().any(|r| r.values.len() > 3) {
            info!("ignoring reactive demand, shunts and voltage data in bus block");
        }
        let lookup = |v: f64, line: usize| -> Result<usize, CaseError> {
            let number = as_bus_number(v, line)?;
            index_of
                .get(&number)
                .copied()
                .ok_or_else(|| CaseError::Syntax {
                    line,
                    message: format!("reference to unknown bus {number}"),
                })
        };

        let mut branches = Vec::new();
        for row in &self.branch {
            let v = &row.values;
            let status = v.get(10).copied().unwrap_or(1.0);
            if status == 0.0 {
                info!("skipping out-of-service branch on line {}", row.line);
                continue;
            }
            let rate = v.get(5).copied().unwrap_or(0.0);
            let limit = if rate == 0.0 { f64::INFINITY } else { rate };
            let tap = match v.get(8).copied().unwrap_or(0.0) {
                0.0 => 1.0,
                t => t,
            };
            branches.push(Branch {
                from_bus: lookup(v[0], row.line)?,
                to_bus: lookup(v[1], row.line)?,
                reactance: v[3],
                tap,
                flow_min: -limit,
                flow_max: limit,
            });
        }

        let mut generators = Vec::new();
        for (k, (row, cost)) in self.gen.iter().zip(&self.gencost).enumerate() {
            let v = &row.values;
            if v[7] <= 0.0 {
                info!("skipping out-of-service generator on line {}", row.line);
                continue;
            }
            let (cost_quadratic, cost_linear) = polynomial_cost(cost)?;
            let fuel_label = self.genfuel.as_ref().map(|f| f[k].clone());
            generators.push(Generator {
                id: generators.len(),
                bus: lookup(v[0], row.line)?,
                cost_linear,
                cost_quadratic,
                p_min: v[9],
                p_max: v[8],
                fuel_label,
                carbon: None,
            });
        }

        let slack_bus = match buses.iter().position(|b| b.is_reference) {
            Some(i) => i,
            None => {
                warn!("case has no reference bus; using the first bus as slack");
                0
            }
        };
        let mut network = Network {
            name: if self.name.is_empty() {
                "case".into()
            } else {
                self.name
            },
            base_mva: self.base_mva,
            buses,
            branches,
            generators,
            slack_bus,
        };
        if let Some(numbers) = &self.load_buses {
            network.set_load_buses(numbers)?;
        }
        network.validate()?;
        Ok(network)
    }
}

/// Returns `(quadratic, linear)` coefficients of a model-2 cost row.
fn polynomial_cost(row: &Row) -> Result<(f64, f64), CaseError> {
    let v = &row.values;
    if v[0] == 1.0 {
        return Err(CaseError::UnsupportedCost {
            line: row.line,
            reason: "piecewise-linear cost model".into(),
        });
    }
    if v[0] != 2.0 {
        return Err(CaseError::UnsupportedCost {
            line: row.line,
            reason: format!("unknown cost model {}", v[0]),
        });
    }
    let n = v[3];
    if n.fract() != 0.0 || n < 0.0 {
        return Err(CaseError::Syntax {
            line: row.line,
            message: format!("invalid coefficient count {n}"),
        });
    }
    let n = n as usize;
    if v.len() < 4 + n {
        return Err(CaseError::RowWidth {
            block: "gencost",
            line: row.line,
            expected: 4 + n,
            got: v.len(),
        });
    }
    let coeffs = &v[4..4 + n];
    if n > 3 {
        return Err(CaseError::UnsupportedCost {
            line: row.line,
            reason: format!("unsupported cost degree {}", n - 1),
        });
    }
    // coeffs are highest degree first: [c2, c1, c0] / [c1, c0] / [c0]
    let (c2, c1) = match n {
        3 => (coeffs[0], coeffs[1]),
        2 => (0.0, coeffs[0]),
        _ => (0.0, 0.0),
    };
    if c2 < 0.0 {
        return Err(CaseError::UnsupportedCost {
            line: row.line,
            reason: "negative quadratic coefficient".into(),
        });
    }
    Ok((c2, c1))
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '\'' | '"' => in_quote = !in_quote,
            '%' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Gathers the text between `open` and the matching `close`, starting on
/// line `start`. Returns the body as (line, text) pieces and the end line.
fn collect_until(
    lines: &[(usize, String)],
    start: usize,
    open: char,
    close: char,
) -> Result<(Vec<(usize, String)>, usize), CaseError> {
    let mut body = Vec::new();
    for (k, (lineno, line)) in lines.iter().enumerate().skip(start) {
        let mut text = line.as_str();
        if k == start {
            text = &text[text.find(open).map(|p| p + 1).unwrap_or(0)..];
        }
        if let Some(end) = text.find(close) {
            body.push((*lineno, text[..end].to_string()));
            return Ok((body, k));
        }
        body.push((*lineno, text.to_string()));
    }
    Err(CaseError::Syntax {
        line: lines[start].0,
        message: format!("unterminated `{open}` block"),
    })
}

fn parse_matrix(body: &[(usize, String)]) -> Result<Vec<Row>, CaseError> {
    let mut rows = Vec::new();
    for (lineno, text) in body {
        for segment in text.split(';') {
            let tokens: Vec<&str> = segment
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .collect();
            if tokens.is_empty() {
                continue;
            }
            let values = tokens
                .iter()
                .map(|t| parse_number(t, *lineno))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(Row {
                line: *lineno,
                values,
            });
        }
    }
    Ok(rows)
}

fn parse_cell_strings(body: &[(usize, String)]) -> Vec<String> {
    let mut out = Vec::new();
    for (_, text) in body {
        let mut rest = text.as_str();
        while let Some(start) = rest.find(['\'', '"']) {
            let quote = rest.as_bytes()[start] as char;
            let after = &rest[start + 1..];
            match after.find(quote) {
                Some(end) => {
                    out.push(after[..end].to_string());
                    rest = &after[end + 1..];
                }
                None => break,
            }
        }
    }
    out
}

fn parse_number(token: &str, line: usize) -> Result<f64, CaseError> {
    match token {
        "Inf" | "inf" => Ok(f64::INFINITY),
        "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
        _ => token.parse::<f64>().map_err(|_| CaseError::NonNumeric {
            line,
            token: token.to_string(),
        }),
    }
}

fn as_bus_number(v: f64, line: usize) -> Result<u32, CaseError> {
    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
        return Err(CaseError::Syntax {
            line,
            message: format!("invalid bus number {v}"),
        });
    }
    Ok(v as u32)
}

fn check_width(block: &'static str, rows: &[Row], min: usize) -> Result<(), CaseError> {
    for row in rows {
        if row.values.len() < min {
            return Err(CaseError::RowWidth {
                block,
                line: row.line,
                expected: min,
                got: row.values.len(),
            });
        }
    }
    Ok(())
}
