//! Named learnable parameters, their initialization, and the checkpoint
//! format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::config::NnConfig;
use crate::NnError;

/// Every learnable tensor of encoder, decoder, and critic, addressable
/// by name. Gradient stores and optimizer state mirror the same keys.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub config: NnConfig,
    tensors: BTreeMap<String, Array2<f64>>,
}

/// Gradients keyed like [`PolicyParams`].
pub type GradStore = BTreeMap<String, Array2<f64>>;

/// Canonical tensor list: (name, rows, cols, fan_in). Initialization
/// draws in exactly this order, so a seed pins every weight.
fn tensor_spec(cfg: &NnConfig) -> Vec<(String, usize, usize, usize)> {
    let f = cfg.f_prime;
    let mut spec: Vec<(String, usize, usize, usize)> = vec![
        ("enc.low.w0".into(), cfg.in_features, cfg.hidden_low, cfg.in_features),
        ("enc.low.w1".into(), cfg.hidden_low, cfg.f1, cfg.hidden_low),
        ("enc.high.w0".into(), cfg.f1, cfg.hidden_high, cfg.f1),
        ("enc.high.w1".into(), cfg.hidden_high, f, cfg.hidden_high),
        ("dec.wq".into(), 3 * f, f, 3 * f),
        ("dec.wk".into(), f, f, f),
        ("dec.wv".into(), f, f, f),
        ("dec.wo".into(), f, f, f),
        ("dec.wk_final".into(), f, f, f),
        ("dec.v_f".into(), 1, f, f),
        ("critic.wq".into(), f, f, f),
        ("critic.wk".into(), f, f, f),
        ("critic.wv".into(), f, f, f),
        ("critic.w1".into(), f, cfg.critic_hidden, f),
        ("critic.b1".into(), 1, cfg.critic_hidden, f),
        ("critic.w2".into(), cfg.critic_hidden, 1, cfg.critic_hidden),
        ("critic.b2".into(), 1, 1, cfg.critic_hidden),
    ];
    spec.sort_by(|a, b| a.0.cmp(&b.0));
    spec
}

impl PolicyParams {
    /// Uniform init on [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a seeded
    /// stream; identical (config, seed) gives identical parameters.
    pub fn init(config: &NnConfig, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, rows, cols, fan_in) in tensor_spec(config) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut m = Array2::zeros((rows, cols));
            for v in m.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
            tensors.insert(name, m);
        }
        Ok(PolicyParams {
            config: config.clone(),
            tensors,
        })
    }

    pub fn get(&self, name: &str) -> &Array2<f64> {
        &self.tensors[name]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Array2<f64> {
        self.tensors.get_mut(name).expect("unknown parameter")
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Array2<f64>)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Array2<f64>)> {
        self.tensors.iter_mut()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(|m| m.len()).sum()
    }

    /// Puts every tensor on a tape as a leaf, remembering the mapping so
    /// gradients can be read back by name.
    pub fn bind<'t>(&self, tape: &'t Tape) -> BoundParams<'t> {
        let mut vars = BTreeMap::new();
        for (name, value) in &self.tensors {
            vars.insert(name.clone(), tape.leaf(value.clone()));
        }
        BoundParams { tape, vars }
    }
}

pub struct BoundParams<'t> {
    tape: &'t Tape,
    vars: BTreeMap<String, Var>,
}

impl<'t> BoundParams<'t> {
    pub fn var(&self, name: &str) -> Var {
        self.vars[name]
    }

    /// Collects the gradients of a reverse sweep into a named store;
    /// parameters the loss never touched get zero gradients.
    pub fn collect(&self, grads: &[Option<Array2<f64>>], params: &PolicyParams) -> GradStore {
        let mut out = GradStore::new();
        for (name, var) in &self.vars {
            let g = self
                .tape
                .grad_of(grads, *var)
                .unwrap_or_else(|| Array2::zeros(params.get(name).raw_dim()));
            out.insert(name.clone(), g);
        }
        out
    }
}

const CKPT_MAGIC: &str = "scenred-checkpoint v1";

/// Writes a checkpoint: a version line, a config echo, then one
/// `tensor <name> <rows> <cols>` header plus row-major values per tensor.
/// Floats round-trip bit-exact.
pub fn write_checkpoint(
    params: &PolicyParams,
    config_echo: &str,
    w: &mut impl Write,
) -> Result<(), NnError> {
    let mut out = String::new();
    out.push_str(CKPT_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "config_lines {}", config_echo.lines().count());
    for line in config_echo.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let nn = &params.config;
    let _ = writeln!(
        out,
        "nn {} {} {} {} {} {} {}",
        nn.in_features, nn.hidden_low, nn.f1, nn.hidden_high, nn.f_prime, nn.heads, nn.critic_hidden
    );
    let _ = writeln!(out, "tensors {}", params.tensors.len());
    for (name, m) in &params.tensors {
        let _ = writeln!(out, "tensor {name} {} {}", m.nrows(), m.ncols());
        let mut first = true;
        for v in m.iter() {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_checkpoint_path(
    params: &PolicyParams,
    config_echo: &str,
    path: &Path,
) -> Result<(), NnError> {
    let mut f = std::fs::File::create(path)?;
    write_checkpoint(params, config_echo, &mut f)
}

/// Reads a checkpoint, returning the parameters and the config echo.
pub fn read_checkpoint(r: impl Read) -> Result<(PolicyParams, String), NnError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let mut next = || -> Result<String, NnError> {
        lines
            .next()
            .ok_or_else(|| NnError::Checkpoint("unexpected end of file".into()))?
            .map_err(NnError::Io)
    };
    let magic = next()?;
    if magic != CKPT_MAGIC {
        return Err(NnError::Checkpoint(format!("bad header `{magic}`")));
    }
    let count_line = next()?;
    let n_cfg: usize = count_line
        .strip_prefix("config_lines ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| NnError::Checkpoint("bad config_lines".into()))?;
    let mut echo = String::new();
    for _ in 0..n_cfg {
        let line = next()?;
        let body = line
            .strip_prefix("# ")
            .or_else(|| line.strip_prefix('#'))
            .ok_or_else(|| NnError::Checkpoint("bad config echo line".into()))?;
        echo.push_str(body);
        echo.push('\n');
    }
    let nn_line = next()?;
    let parts: Vec<usize> = nn_line
        .strip_prefix("nn ")
        .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
        .unwrap_or_default();
    if parts.len() != 7 {
        return Err(NnError::Checkpoint("bad nn line".into()));
    }
    let config = NnConfig {
        in_features: parts[0],
        hidden_low: parts[1],
        f1: parts[2],
        hidden_high: parts[3],
        f_prime: parts[4],
        heads: parts[5],
        critic_hidden: parts[6],
    };
    config.validate()?;
    let n_tensors: usize = next()?
        .strip_prefix("tensors ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| NnError::Checkpoint("bad tensors line".into()))?;
    let mut tensors = BTreeMap::new();
    for _ in 0..n_tensors {
        let header = next()?;
        let rest = header
            .strip_prefix("tensor ")
            .ok_or_else(|| NnError::Checkpoint("bad tensor header".into()))?;
        let mut it = rest.split_whitespace();
        let name = it
            .next()
            .ok_or_else(|| NnError::Checkpoint("missing tensor name".into()))?
            .to_string();
        let rows: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| NnError::Checkpoint("bad tensor rows".into()))?;
        let cols: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| NnError::Checkpoint("bad tensor cols".into()))?;
        let data_line = next()?;
        let values: Result<Vec<f64>, NnError> = data_line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| NnError::Checkpoint(format!("bad value `{t}`")))
            })
            .collect();
        let values = values?;
        if values.len() != rows * cols {
            return Err(NnError::Checkpoint(format!(
                "tensor {name}: {} values for {}x{}",
                values.len(),
                rows,
                cols
            )));
        }
        let m = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| NnError::Checkpoint(e.to_string()))?;
        tensors.insert(name, m);
    }
    let params = PolicyParams { config, tensors };
    let expect: Vec<_> = tensor_spec(&params.config);
    for (name, rows, cols, _) in &expect {
        match params.tensors.get(name) {
            Some(m) if m.nrows() == *rows && m.ncols() == *cols => {}
            Some(m) => {
                return Err(NnError::Checkpoint(format!(
                    "tensor {name} has shape {}x{}, config expects {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )))
            }
            None => return Err(NnError::Checkpoint(format!("missing tensor {name}"))),
        }
    }
    Ok((params, echo))
}

pub fn read_checkpoint_path(path: &Path) -> Result<(PolicyParams, String), NnError> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(f)
}
