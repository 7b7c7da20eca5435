//! DIMACS CNF. Comment lines (`c ...`) are skipped; a `%` line ends the
//! clause section, as in the SATLIB benchmark files.

use std::fmt::Write as _;

use super::{Clause, Formula, Literal};
use crate::error::{Error, Result};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Dimacs {
        line,
        msg: msg.into(),
    }
}

pub fn parse_dimacs(text: &str) -> Result<Formula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, "duplicate header"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(err(line_no, format!("malformed header `{line}`")));
            }
            let n = fields[2]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad variable count `{}`", fields[2])))?;
            let m = fields[3]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad clause count `{}`", fields[3])))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| err(line_no, "clause before `p cnf` header"))?;
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| err(line_no, format!("bad literal `{tok}`")))?;
            if v == 0 {
                clauses.push(Clause::new(std::mem::take(&mut current)));
                continue;
            }
            let var = v.unsigned_abs() as usize;
            if var > n {
                return Err(err(
                    line_no,
                    format!("literal {v} out of range for {n} variables"),
                ));
            }
            current.push(Literal::new(var - 1, v < 0));
        }
    }
    let (n, m) = header.ok_or_else(|| err(last_line, "missing `p cnf` header"))?;
    if !current.is_empty() {
        return Err(err(last_line, "last clause is missing its terminating 0"));
    }
    if clauses.len() != m {
        return Err(err(
            last_line,
            format!("header announces {m} clauses, found {}", clauses.len()),
        ));
    }
    Formula::new(n, clauses)
}

pub fn write_dimacs(f: &Formula) -> String {
    let mut out = String::with_capacity(16 * f.n_clauses() + 32);
    let _ = writeln!(out, "p cnf {} {}", f.n_vars(), f.n_clauses());
    for c in f.clauses() {
        for l in c.lits() {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}
