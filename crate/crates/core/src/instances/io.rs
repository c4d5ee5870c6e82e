//! Plain-text instance files: a header line `qp m n seed` or
//! `rpca m n r seed`, then row-major matrices with one row per line.
//! QP files hold `Q, q, A, b, x*, y*`; RPCA files hold `X*, Z*`.

use super::qp::{assemble, QpInstance};
use super::rpca::{default_lambda, RpcaInstance};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write;

#[derive(Debug, Clone)]
pub enum Instance {
    Qp(QpInstance),
    Rpca(RpcaInstance),
}

fn put_matrix(out: &mut String, a: &DMatrix<f64>) {
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn put_vector(out: &mut String, v: &DVector<f64>) {
    let row: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
    let _ = writeln!(out, "{}", row.join(" "));
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    match inst {
        Instance::Qp(p) => {
            let _ = writeln!(out, "qp {} {} {}", p.m, p.n, p.seed);
            put_matrix(&mut out, &p.q_mat);
            put_vector(&mut out, &p.q);
            put_matrix(&mut out, &p.a);
            put_vector(&mut out, &p.b);
            put_vector(&mut out, &p.x_star);
            put_vector(&mut out, &p.y_star);
        }
        Instance::Rpca(p) => {
            let _ = writeln!(out, "rpca {} {} {} {}", p.m, p.n, p.r, p.seed);
            put_matrix(&mut out, &p.x_star);
            put_matrix(&mut out, &p.z_star);
        }
    }
    out
}

struct Numbers<'a> {
    tokens: std::str::SplitWhitespace<'a>,
}

impl Numbers<'_> {
    fn take(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count)
            .map(|_| {
                let t = self.tokens.next().ok_or_else(|| Error::Parse("file ends early".into()))?;
                t.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{t}`")))
            })
            .collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(rows, cols, &self.take(rows * cols)?))
    }

    fn vector(&mut self, len: usize) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.take(len)?))
    }

    fn finish(mut self) -> Result<()> {
        match self.tokens.next() {
            None => Ok(()),
            Some(t) => Err(Error::Parse(format!("trailing data starting at `{t}`"))),
        }
    }
}

fn parse_header<const N: usize>(fields: &[&str]) -> Result<[u64; N]> {
    if fields.len() != N + 1 {
        return Err(Error::Parse(format!("header `{}` should have {} numbers", fields.join(" "), N)));
    }
    let mut out = [0u64; N];
    for (slot, f) in out.iter_mut().zip(&fields[1..]) {
        *slot = f.parse().map_err(|_| Error::Parse(format!("bad header field `{f}`")))?;
    }
    Ok(out)
}

/// Parses and validates an instance file.
pub fn read_instance(text: &str) -> Result<Instance> {
    let mut lines = text.splitn(2, '\n');
    let header = lines.next().unwrap_or("");
    let body = lines.next().unwrap_or("");
    let fields: Vec<&str> = header.split_whitespace().collect();
    let mut nums = Numbers { tokens: body.split_whitespace() };
    match fields.first().copied() {
        Some("qp") => {
            let [m, n, seed] = parse_header::<3>(&fields)?;
            let (m, n) = (m as usize, n as usize);
            if m == 0 || n == 0 {
                return Err(Error::Parse("QP dimensions must be positive".into()));
            }
            let q_mat = nums.matrix(n, n)?;
            let q = nums.vector(n)?;
            let a = nums.matrix(m, n)?;
            let b = nums.vector(m)?;
            let x_star = nums.vector(n)?;
            let y_star = nums.vector(m)?;
            nums.finish()?;
            Ok(Instance::Qp(assemble(m, n, seed, q_mat, q, a, b, x_star, y_star)?))
        }
        Some("rpca") => {
            let [m, n, r, seed] = parse_header::<4>(&fields)?;
            let (m, n, r) = (m as usize, n as usize, r as usize);
            let x_star = nums.matrix(m, n)?;
            let z_star = nums.matrix(m, n)?;
            nums.finish()?;
            let inst = RpcaInstance { m, n, r, seed, h: &x_star + &z_star, x_star, z_star, lambda: default_lambda(m, n) };
            inst.check_invariants()?;
            Ok(Instance::Rpca(inst))
        }
        _ => Err(Error::Parse(format!("unknown header `{header}`"))),
    }
}
