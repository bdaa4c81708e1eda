//! Line-oriented text serialization of instances.
//!
//! Matrices are written dense, row-major, one row per line. Floats use
//! Rust's shortest round-trip formatting, so a written file re-parses to
//! bit-identical values; infinities appear as `inf` / `-inf`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::CoreError;
use crate::model::{
    CachedOptimum, FirstStage, InstanceMeta, ProblemFamily, Scenario, SpInstance, VarKind,
};

const MAGIC: &str = "spinstance v1";

fn push_floats(out: &mut String, label: &str, values: &[f64]) {
    out.push_str(label);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

fn push_matrix(out: &mut String, label: &str, m: &Array2<f64>) {
    out.push_str(label);
    out.push('\n');
    for row in m.rows() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
}

fn push_kinds(out: &mut String, label: &str, kinds: &[VarKind]) {
    out.push_str(label);
    out.push(' ');
    for k in kinds {
        out.push(k.letter());
    }
    out.push('\n');
}

fn push_bounds(out: &mut String, label: &str, bounds: &[(f64, f64)]) {
    out.push_str(label);
    out.push('\n');
    for (lo, hi) in bounds {
        let _ = writeln!(out, "{lo} {hi}");
    }
}

pub fn write_instance(inst: &SpInstance, w: &mut impl Write) -> Result<(), CoreError> {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "family {}", inst.meta.family.as_str());
    let _ = writeln!(out, "seed {}", inst.meta.seed);
    let _ = writeln!(out, "n1 {}", inst.n1());
    let _ = writeln!(out, "n2 {}", inst.n2());
    let _ = writeln!(out, "m1 {}", inst.m1());
    let _ = writeln!(out, "m2 {}", inst.m2());
    let _ = writeln!(out, "scenarios {}", inst.num_scenarios());
    out.push_str("first_stage\n");
    push_floats(&mut out, "c", &inst.first.c);
    push_matrix(&mut out, "A", &inst.first.a);
    push_floats(&mut out, "b", &inst.first.b);
    push_kinds(&mut out, "kinds", &inst.first.kinds);
    push_bounds(&mut out, "bounds", &inst.first.bounds);
    for (i, sc) in inst.scenarios.iter().enumerate() {
        let _ = writeln!(out, "scenario {i}");
        let _ = writeln!(out, "prob {}", sc.prob);
        push_floats(&mut out, "q", &sc.q);
        push_matrix(&mut out, "W", &sc.w);
        push_floats(&mut out, "h", &sc.h);
        push_matrix(&mut out, "T", &sc.t);
        push_kinds(&mut out, "ykinds", &sc.y_kinds);
        push_bounds(&mut out, "ybounds", &sc.y_bounds);
    }
    if let Some(opt) = &inst.optimum {
        out.push_str("optimum\n");
        let _ = writeln!(out, "v {}", opt.value);
        push_floats(&mut out, "x", &opt.x);
    }
    out.push_str("end\n");
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_instance_path(inst: &SpInstance, path: &Path) -> Result<(), CoreError> {
    let mut f = std::fs::File::create(path)?;
    write_instance(inst, &mut f)
}

struct Parser<R> {
    lines: std::io::Lines<BufReader<R>>,
    line_no: usize,
}

impl<R: Read> Parser<R> {
    fn next_line(&mut self) -> Result<String, CoreError> {
        self.line_no += 1;
        match self.lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(CoreError::Io(e)),
            None => Err(CoreError::parse(self.line_no, "unexpected end of file")),
        }
    }

    fn tagged(&mut self, tag: &str) -> Result<String, CoreError> {
        let line = self.next_line()?;
        match line.strip_prefix(tag) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => {
                Ok(rest.trim_start().to_string())
            }
            _ => Err(CoreError::parse(
                self.line_no,
                format!("expected `{tag}`, found `{line}`"),
            )),
        }
    }

    fn floats(&mut self, tag: &str) -> Result<Vec<f64>, CoreError> {
        let rest = self.tagged(tag)?;
        self.parse_float_list(&rest)
    }

    fn parse_float_list(&self, s: &str) -> Result<Vec<f64>, CoreError> {
        s.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| CoreError::parse(self.line_no, format!("bad float `{tok}`")))
            })
            .collect()
    }

    fn count(&mut self, tag: &str) -> Result<usize, CoreError> {
        let rest = self.tagged(tag)?;
        rest.parse::<usize>()
            .map_err(|_| CoreError::parse(self.line_no, format!("bad count `{rest}`")))
    }

    fn matrix(&mut self, tag: &str, rows: usize, cols: usize) -> Result<Array2<f64>, CoreError> {
        let rest = self.tagged(tag)?;
        if !rest.is_empty() {
            return Err(CoreError::parse(self.line_no, "matrix tag takes no values"));
        }
        let mut m = Array2::zeros((rows, cols));
        for i in 0..rows {
            let line = self.next_line()?;
            let vals = self.parse_float_list(&line)?;
            if vals.len() != cols {
                return Err(CoreError::parse(
                    self.line_no,
                    format!("row has {} values, expected {cols}", vals.len()),
                ));
            }
            for (j, v) in vals.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    fn kinds(&mut self, tag: &str, n: usize) -> Result<Vec<VarKind>, CoreError> {
        let rest = self.tagged(tag)?;
        if rest.len() != n {
            return Err(CoreError::parse(
                self.line_no,
                format!("{} kind letters, expected {n}", rest.len()),
            ));
        }
        rest.chars()
            .map(|ch| {
                VarKind::from_letter(ch)
                    .ok_or_else(|| CoreError::parse(self.line_no, format!("bad kind `{ch}`")))
            })
            .collect()
    }

    fn bounds(&mut self, tag: &str, n: usize) -> Result<Vec<(f64, f64)>, CoreError> {
        let rest = self.tagged(tag)?;
        if !rest.is_empty() {
            return Err(CoreError::parse(self.line_no, "bounds tag takes no values"));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let line = self.next_line()?;
            let vals = self.parse_float_list(&line)?;
            if vals.len() != 2 {
                return Err(CoreError::parse(self.line_no, "bound line needs `lo hi`"));
            }
            out.push((vals[0], vals[1]));
        }
        Ok(out)
    }
}

pub fn read_instance(r: impl Read) -> Result<SpInstance, CoreError> {
    let mut p = Parser {
        lines: BufReader::new(r).lines(),
        line_no: 0,
    };
    let magic = p.next_line()?;
    if magic != MAGIC {
        return Err(CoreError::parse(1, format!("bad header `{magic}`")));
    }
    let family_str = p.tagged("family")?;
    let family = ProblemFamily::parse(&family_str)
        .ok_or_else(|| CoreError::parse(p.line_no, format!("unknown family `{family_str}`")))?;
    let seed = p
        .tagged("seed")?
        .parse::<u64>()
        .map_err(|_| CoreError::parse(p.line_no, "bad seed"))?;
    let n1 = p.count("n1")?;
    let n2 = p.count("n2")?;
    let m1 = p.count("m1")?;
    let m2 = p.count("m2")?;
    let num_scenarios = p.count("scenarios")?;

    p.tagged("first_stage")?;
    let c = p.floats("c")?;
    let a = p.matrix("A", m1, n1)?;
    let b = p.floats("b")?;
    let kinds = p.kinds("kinds", n1)?;
    let first_bounds = p.bounds("bounds", n1)?;
    if c.len() != n1 || b.len() != m1 {
        return Err(CoreError::parse(p.line_no, "first stage dimensions"));
    }
    let first = FirstStage {
        c,
        a,
        b,
        kinds,
        bounds: first_bounds,
    };

    let mut scenarios = Vec::with_capacity(num_scenarios);
    for i in 0..num_scenarios {
        let idx = p.count("scenario")?;
        if idx != i {
            return Err(CoreError::parse(p.line_no, "scenario index out of order"));
        }
        let prob = p
            .tagged("prob")?
            .parse::<f64>()
            .map_err(|_| CoreError::parse(p.line_no, "bad prob"))?;
        let q = p.floats("q")?;
        let w = p.matrix("W", m2, n2)?;
        let h = p.floats("h")?;
        let t = p.matrix("T", m2, n1)?;
        let y_kinds = p.kinds("ykinds", n2)?;
        let y_bounds = p.bounds("ybounds", n2)?;
        if q.len() != n2 || h.len() != m2 {
            return Err(CoreError::parse(p.line_no, "scenario dimensions"));
        }
        scenarios.push(Scenario {
            prob,
            q,
            w,
            h,
            t,
            y_kinds,
            y_bounds,
        });
    }

    let trailer = p.next_line()?;
    let optimum = if trailer == "optimum" {
        let value = p
            .tagged("v")?
            .parse::<f64>()
            .map_err(|_| CoreError::parse(p.line_no, "bad optimum value"))?;
        let x = p.floats("x")?;
        let end = p.next_line()?;
        if end != "end" {
            return Err(CoreError::parse(p.line_no, "missing end marker"));
        }
        Some(CachedOptimum { value, x })
    } else if trailer == "end" {
        None
    } else {
        return Err(CoreError::parse(
            p.line_no,
            format!("expected `optimum` or `end`, found `{trailer}`"),
        ));
    };

    let inst = SpInstance {
        first,
        scenarios,
        meta: InstanceMeta { family, seed },
        optimum,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn read_instance_path(path: &Path) -> Result<SpInstance, CoreError> {
    let f = std::fs::File::open(path)?;
    read_instance(f)
}
