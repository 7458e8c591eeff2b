//! Text parameter files.
//!
//! ```text
//! dannlab-v1
//! variant deep
//! input_dim 64
//! ...
//! domain_branch true
//! lambda 0
//! tensor shared.1.weight 256 64
//! <one matrix row per line, space separated>
//! ...
//! end
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a save/load cycle is
//! exact. Tensors appear in a fixed order: shared, task head, domain head, and
//! within each stack by layer index.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{DannModel, NetworkSpec};
use crate::nn::{Layer, Stack};
use crate::{Error, Result};

pub const FORMAT_TAG: &str = "dannlab-v1";

fn named_tensors(model: &DannModel) -> Vec<(String, Array2<f64>)> {
    let mut out = Vec::new();
    let mut visit = |prefix: &str, stack: &Stack| {
        for (i, layer) in stack.layers.iter().enumerate() {
            match layer {
                Layer::Dense(d) => {
                    out.push((format!("{prefix}.{i}.weight"), d.weight.value.clone()));
                    out.push((format!("{prefix}.{i}.bias"), d.bias.value.clone()));
                }
                Layer::BatchNorm(bn) => {
                    out.push((format!("{prefix}.{i}.scale"), bn.scale.value.clone()));
                    out.push((format!("{prefix}.{i}.shift"), bn.shift.value.clone()));
                    out.push((format!("{prefix}.{i}.running_mean"), row(&bn.running_mean)));
                    out.push((format!("{prefix}.{i}.running_var"), row(&bn.running_var)));
                }
                Layer::Relu(_) | Layer::Dropout(_) => {}
            }
        }
    };
    visit("shared", &model.shared);
    visit("task", &model.task_head);
    if let Some(d) = &model.domain_head {
        visit("domain", d);
    }
    out
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.clone().insert_axis(ndarray::Axis(0))
}

pub fn write_model(model: &DannModel) -> String {
    let spec = model.spec();
    let mut s = String::new();
    let _ = writeln!(s, "{FORMAT_TAG}");
    let _ = writeln!(s, "variant {}", spec.variant);
    let _ = writeln!(s, "input_dim {}", spec.input_dim);
    let _ = writeln!(s, "shared_layers {}", spec.shared_layers);
    let _ = writeln!(s, "task_layers {}", spec.task_layers);
    let _ = writeln!(s, "domain_layers {}", spec.domain_layers);
    let _ = writeln!(s, "hidden_width {}", spec.hidden_width);
    let _ = writeln!(s, "bn_momentum {}", spec.bn_momentum);
    let _ = writeln!(s, "bn_epsilon {}", spec.bn_epsilon);
    let _ = writeln!(s, "domain_branch {}", model.has_domain_branch());
    let _ = writeln!(s, "lambda {}", model.gate.lambda());
    for (name, t) in named_tensors(model) {
        let _ = writeln!(s, "tensor {name} {} {}", t.nrows(), t.ncols());
        for r in t.rows() {
            let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    s.push_str("end\n");
    s
}

pub fn save_model(model: &DannModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<DannModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim())
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: "<model>".into(),
            line: self.line,
            message: message.into(),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let l = self.next()?;
        let value = l
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} <value>`")))?;
        value
            .parse()
            .map_err(|_| self.err(format!("bad value for {key}: `{value}`")))
    }
}

pub fn read_model(text: &str) -> Result<DannModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()? != FORMAT_TAG {
        return Err(lines.err(format!("missing `{FORMAT_TAG}` header")));
    }
    let variant: String = lines.field("variant")?;
    let spec = NetworkSpec {
        variant: variant.parse()?,
        input_dim: lines.field("input_dim")?,
        shared_layers: lines.field("shared_layers")?,
        task_layers: lines.field("task_layers")?,
        domain_layers: lines.field("domain_layers")?,
        hidden_width: lines.field("hidden_width")?,
        bn_momentum: lines.field("bn_momentum")?,
        bn_epsilon: lines.field("bn_epsilon")?,
    };
    let with_domain: bool = lines.field("domain_branch")?;
    let lambda: f64 = lines.field("lambda")?;
    let mut model = if with_domain {
        DannModel::build(spec, 0)?
    } else {
        DannModel::build_baseline(spec, 0)?
    };
    model.gate.set_lambda(lambda)?;

    let expected = named_tensors(&model);
    let mut loaded = Vec::with_capacity(expected.len());
    for (name, shape) in expected.iter().map(|(n, t)| (n, t.dim())) {
        let header = lines.next()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let dims = match parts.as_slice() {
            ["tensor", n, r, c] if *n == name => (r.parse::<usize>().ok(), c.parse::<usize>().ok()),
            _ => return Err(lines.err(format!("expected tensor `{name}`, found `{header}`"))),
        };
        if dims != (Some(shape.0), Some(shape.1)) {
            return Err(lines.err(format!("tensor `{name}` should be {} × {}", shape.0, shape.1)));
        }
        let mut t = Array2::zeros(shape);
        for r in 0..shape.0 {
            let l = lines.next()?;
            let values: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| lines.err("malformed number"))?;
            if values.len() != shape.1 {
                return Err(lines.err(format!("expected {} values", shape.1)));
            }
            t.row_mut(r).assign(&Array1::from(values));
        }
        loaded.push(t);
    }
    if lines.next()? != "end" {
        return Err(lines.err("missing `end` marker"));
    }

    let mut it = loaded.into_iter();
    let mut fill = |stack: &mut Stack| {
        for layer in &mut stack.layers {
            match layer {
                Layer::Dense(d) => {
                    d.weight.value = it.next().unwrap();
                    d.bias.value = it.next().unwrap();
                }
                Layer::BatchNorm(bn) => {
                    bn.scale.value = it.next().unwrap();
                    bn.shift.value = it.next().unwrap();
                    bn.running_mean = it.next().unwrap().row(0).to_owned();
                    bn.running_var = it.next().unwrap().row(0).to_owned();
                }
                Layer::Relu(_) | Layer::Dropout(_) => {}
            }
        }
    };
    fill(&mut model.shared);
    fill(&mut model.task_head);
    if let Some(d) = &mut model.domain_head {
        fill(d);
    }
    Ok(model)
}
