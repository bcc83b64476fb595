//! Plain-text dump of a [`QuadraticProgram`] for cross-checking with external
//! solvers.
//!
//! ```text
//! qp-dump 1
//! <n> <m_eq> <m_in>
//! H        (n rows of n values)
//! f        (1 row of n values)
//! constant (1 value)
//! A_eq     (m_eq rows of n values)
//! b_eq     (1 row of m_eq values)
//! A_in     (m_in rows of n values)
//! b_in     (1 row of m_in values)
//! names    (1 row of n labels)
//! ```
//!
//! Every section starts with its name on a line of its own. Numbers use the
//! shortest round-trip representation, so `parse(dump(qp)) == qp`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::problem::QuadraticProgram;
use crate::QpError;

const MAGIC: &str = "qp-dump 1";

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let row: Vec<String> = values.map(|v| format!("{v:e}")).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

fn push_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    out.push_str(name);
    out.push('\n');
    for row in m.row_iter() {
        push_row(out, row.iter());
    }
}

pub fn dump(qp: &QuadraticProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "{} {} {}", qp.num_vars(), qp.num_eq(), qp.num_in());
    push_matrix(&mut out, "H", &qp.hessian);
    out.push_str("f\n");
    push_row(&mut out, qp.linear.iter());
    let _ = writeln!(out, "constant\n{:e}", qp.constant);
    push_matrix(&mut out, "A_eq", &qp.a_eq);
    out.push_str("b_eq\n");
    push_row(&mut out, qp.b_eq.iter());
    push_matrix(&mut out, "A_in", &qp.a_in);
    out.push_str("b_in\n");
    push_row(&mut out, qp.b_in.iter());
    out.push_str("names\n");
    out.push_str(&qp.var_names.join(" "));
    out.push('\n');
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), QpError> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| QpError::Parse("unexpected end of dump".into()))
    }

    fn expect(&mut self, tag: &str) -> Result<(), QpError> {
        let (no, line) = self.next_line()?;
        if line.trim() != tag {
            return Err(QpError::Parse(format!("line {no}: expected `{tag}`, found `{line}`")));
        }
        Ok(())
    }

    fn numbers(&mut self, expected: usize) -> Result<Vec<f64>, QpError> {
        let (no, line) = self.next_line()?;
        let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let values = values.map_err(|e| QpError::Parse(format!("line {no}: {e}")))?;
        if values.len() != expected {
            return Err(QpError::Parse(format!("line {no}: expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }

    fn matrix(&mut self, tag: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>, QpError> {
        self.expect(tag)?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.numbers(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }

    fn vector(&mut self, tag: &str, len: usize) -> Result<DVector<f64>, QpError> {
        self.expect(tag)?;
        if len == 0 {
            self.next_line()?;
            return Ok(DVector::zeros(0));
        }
        Ok(DVector::from_vec(self.numbers(len)?))
    }
}

pub fn parse(text: &str) -> Result<QuadraticProgram, QpError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    lines.expect(MAGIC)?;
    let (no, header) = lines.next_line()?;
    let dims: Result<Vec<usize>, _> = header.split_whitespace().map(str::parse::<usize>).collect();
    let dims = dims.map_err(|e| QpError::Parse(format!("line {no}: {e}")))?;
    let [n, me, mi] = dims[..] else {
        return Err(QpError::Parse(format!("line {no}: expected `n m_eq m_in`")));
    };
    let hessian = lines.matrix("H", n, n)?;
    let linear = lines.vector("f", n)?;
    lines.expect("constant")?;
    let constant = lines.numbers(1)?[0];
    let a_eq = lines.matrix("A_eq", me, n)?;
    let b_eq = lines.vector("b_eq", me)?;
    let a_in = lines.matrix("A_in", mi, n)?;
    let b_in = lines.vector("b_in", mi)?;
    lines.expect("names")?;
    let var_names: Vec<String> = if n == 0 {
        Vec::new()
    } else {
        lines.next_line()?.1.split_whitespace().map(String::from).collect()
    };
    let qp = QuadraticProgram { hessian, linear, constant, a_eq, b_eq, a_in, b_in, var_names };
    qp.check_dimensions()?;
    Ok(qp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> QuadraticProgram {
        QuadraticProgram::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), DVector::from_row_slice(&[1.0, -0.1]))
            .with_constant(0.25)
            .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 2.0))
            .with_inequalities(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]), DVector::from_row_slice(&[f64::INFINITY, 3.0]))
            .with_var_names(vec!["g0".into(), "rho0".into()])
    }

    #[test]
    fn layout_starts_with_header() {
        let text = dump(&sample());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("qp-dump 1"));
        assert_eq!(lines.next(), Some("2 1 2"));
        assert_eq!(lines.next(), Some("H"));
    }

    #[test]
    fn infinite_bounds_survive() {
        let back = parse(&dump(&sample())).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn truncated_dump_is_an_error() {
        let text = dump(&sample());
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse(&cut), Err(QpError::Parse(_))));
    }

    proptest! {
        #[test]
        fn dump_then_parse_is_identity(
            n in 1usize..5,
            me in 0usize..3,
            mi in 0usize..3,
            seed in proptest::collection::vec(-1e6f64..1e6, 64),
        ) {
            let mut k = 0;
            let mut next = || { k += 1; seed[k % seed.len()] * (k as f64).sqrt() };
            let qp = QuadraticProgram {
                hessian: DMatrix::from_fn(n, n, |_, _| next()),
                linear: DVector::from_fn(n, |_, _| next()),
                constant: next(),
                a_eq: DMatrix::from_fn(me, n, |_, _| next()),
                b_eq: DVector::from_fn(me, |_, _| next()),
                a_in: DMatrix::from_fn(mi, n, |_, _| next()),
                b_in: DVector::from_fn(mi, |_, _| next()),
                var_names: (0..n).map(|i| format!("v{i}")).collect(),
            };
            prop_assert_eq!(parse(&dump(&qp)).unwrap(), qp);
        }
    }
}
