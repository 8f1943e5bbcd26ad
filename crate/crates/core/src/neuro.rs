//! Fixed-topology neural broker: genome representation, forward evaluation
//! with a linear-threshold activation, market-context input encoding, and
//! price decoding.
//!
//! Two representations are supported: a three-layered feedforward net and a
//! fully connected recurrent net whose state is iterated a fixed number of
//! internal steps with the inputs clamped. Outputs live in [−1, 1] by
//! activation saturation and decode affinely onto [0, price_norm] €/kWh.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::broker::{PriceVector, SupplyContext};
use crate::scenario::NormParams;
use crate::{Error, Result};

/// Number of market/context inputs: P_re, P_grid, fit, get, hour signal,
/// day signal.
pub const N_INPUTS: usize = 6;

/// Network shape. The number of outputs always equals the catalog size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    /// Input → hidden → output feedforward net.
    Layered { inputs: usize, hidden: usize, outputs: usize },
    /// `neurons` fully interconnected units; the first `inputs` are clamped
    /// to the input vector, the last `outputs` are read after
    /// `internal_steps` synchronous updates.
    FullyConnected { neurons: usize, internal_steps: usize, inputs: usize, outputs: usize },
}

impl Topology {
    /// Default layered broker topology: 6 inputs, 2 hidden, one output per
    /// catalog duration.
    pub fn layered(hidden: usize, outputs: usize) -> Self {
        Topology::Layered { inputs: N_INPUTS, hidden, outputs }
    }

    /// Fully connected net with `hidden` free neurons beyond inputs and
    /// outputs, iterated 3 internal steps.
    pub fn fully_connected(hidden: usize, outputs: usize) -> Self {
        Topology::FullyConnected {
            neurons: N_INPUTS + hidden + outputs,
            internal_steps: 3,
            inputs: N_INPUTS,
            outputs,
        }
    }

    pub fn inputs(&self) -> usize {
        match *self {
            Topology::Layered { inputs, .. } => inputs,
            Topology::FullyConnected { inputs, .. } => inputs,
        }
    }

    pub fn outputs(&self) -> usize {
        match *self {
            Topology::Layered { outputs, .. } => outputs,
            Topology::FullyConnected { outputs, .. } => outputs,
        }
    }

    /// Total number of genes (weights + biases) a genome must carry.
    pub fn gene_count(&self) -> usize {
        match *self {
            Topology::Layered { inputs, hidden, outputs } => {
                inputs * hidden + hidden + hidden * outputs + outputs
            }
            Topology::FullyConnected { neurons, inputs, .. } => {
                // Only non-input neurons have incoming weights and a bias.
                let free = neurons - inputs;
                neurons * free + free
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Topology::Layered { inputs, hidden, outputs } => {
                if inputs == 0 || hidden == 0 || outputs == 0 {
                    return Err(Error::Checkpoint(format!(
                        "degenerate layered topology {inputs}-{hidden}-{outputs}"
                    )));
                }
            }
            Topology::FullyConnected { neurons, internal_steps, inputs, outputs } => {
                if internal_steps == 0 || inputs == 0 || outputs == 0 || neurons < inputs + outputs {
                    return Err(Error::Checkpoint(format!(
                        "degenerate fully connected topology: {neurons} neurons, \
                         {inputs} inputs, {outputs} outputs, {internal_steps} steps"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Flat weight/bias vector of a network; its layout is fixed by the topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    pub genes: Vec<f64>,
}

impl Genome {
    /// Uniform random genome in [−1, 1] for the given topology.
    pub fn random<R: Rng>(topology: &Topology, rng: &mut R) -> Self {
        let genes = (0..topology.gene_count()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn matches(&self, topology: &Topology) -> Result<()> {
        if self.genes.len() != topology.gene_count() {
            return Err(Error::Checkpoint(format!(
                "genome has {} genes, topology needs {}",
                self.genes.len(),
                topology.gene_count()
            )));
        }
        if let Some(bad) = self.genes.iter().find(|g| !g.is_finite()) {
            return Err(Error::Checkpoint(format!("non-finite gene {bad}")));
        }
        Ok(())
    }
}

/// Linear threshold activation: clamps to [−1, 1], identity in between.
#[inline]
pub fn activate(x: f64) -> f64 {
    if x <= -1.0 {
        -1.0
    } else if x < 1.0 {
        x
    } else {
        1.0
    }
}

/// Normalized network inputs, all in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NetInput {
    pub p_re_norm: f64,
    pub p_grid_norm: f64,
    pub fit_norm: f64,
    pub get_norm: f64,
    /// `sin(π · second_of_day / 86400)`: peaks at noon.
    pub hour_signal: f64,
    /// `sin(π · day_of_year / 365)`: peaks at midsummer.
    pub day_signal: f64,
}

impl NetInput {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.p_re_norm,
            self.p_grid_norm,
            self.fit_norm,
            self.get_norm,
            self.hour_signal,
            self.day_signal,
        ]
    }
}

/// Encode the market context into normalized network inputs.
pub fn encode_input(ctx: &SupplyContext, norms: &NormParams) -> NetInput {
    let pi = std::f64::consts::PI;
    NetInput {
        p_re_norm: (ctx.p_re_w / norms.power_norm_w).clamp(0.0, 1.0),
        p_grid_norm: (ctx.p_grid_w / norms.power_norm_w).clamp(0.0, 1.0),
        fit_norm: (ctx.fit / norms.price_norm).clamp(0.0, 1.0),
        get_norm: (ctx.get / norms.price_norm).clamp(0.0, 1.0),
        hour_signal: (pi * ctx.second_of_day as f64 / 86_400.0).sin(),
        day_signal: (pi * ctx.day_of_year as f64 / 365.0).sin(),
    }
}

/// Evaluate the network on an input vector of length `topology.inputs()`.
///
/// Deterministic and pure; all outputs are in [−1, 1].
pub fn forward(genome: &Genome, topology: &Topology, inputs: &[f64]) -> Vec<f64> {
    debug_assert_eq!(inputs.len(), topology.inputs());
    debug_assert_eq!(genome.len(), topology.gene_count());
    match *topology {
        Topology::Layered { inputs: n_in, hidden, outputs } => {
            let (w_ih, rest) = genome.genes.split_at(n_in * hidden);
            let (b_h, rest) = rest.split_at(hidden);
            let (w_ho, b_o) = rest.split_at(hidden * outputs);
            let hidden_out: Vec<f64> = (0..hidden)
                .map(|j| {
                    let sum: f64 =
                        (0..n_in).map(|i| w_ih[j * n_in + i] * inputs[i]).sum::<f64>() + b_h[j];
                    activate(sum)
                })
                .collect();
            (0..outputs)
                .map(|k| {
                    let sum: f64 = (0..hidden)
                        .map(|j| w_ho[k * hidden + j] * hidden_out[j])
                        .sum::<f64>()
                        + b_o[k];
                    activate(sum)
                })
                .collect()
        }
        Topology::FullyConnected { neurons, internal_steps, inputs: n_in, outputs } => {
            let free = neurons - n_in;
            let (weights, biases) = genome.genes.split_at(neurons * free);
            // All neuron outputs start at zero; inputs stay clamped.
            let mut state = vec![0.0; neurons];
            state[..n_in].copy_from_slice(inputs);
            let mut next = state.clone();
            for _ in 0..internal_steps {
                for f in 0..free {
                    let sum: f64 = (0..neurons)
                        .map(|j| weights[f * neurons + j] * state[j])
                        .sum::<f64>()
                        + biases[f];
                    next[n_in + f] = activate(sum);
                }
                state[n_in..].copy_from_slice(&next[n_in..]);
            }
            state[neurons - outputs..].to_vec()
        }
    }
}

/// Decode network outputs in [−1, 1] onto unit prices in [0, price_scale].
pub fn decode_prices(outputs: &[f64], price_scale: f64) -> PriceVector {
    PriceVector::from_vec(outputs.iter().map(|o| (o + 1.0) / 2.0 * price_scale).collect())
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------
//
// Plain text, one item per line:
//
//     gridbroker-genome v1
//     topology layered            (or: topology fully_connected)
//     inputs 6
//     hidden 2                    (layered only)
//     neurons 15                  (fully connected only)
//     internal_steps 3            (fully connected only)
//     outputs 7
//     genes 35
//     <one gene per line>
//
// Genes are printed with Rust's shortest round-trip float formatting, so a
// written checkpoint reloads bit-exactly.

/// Serialize a genome checkpoint to a string.
pub fn checkpoint_to_string(topology: &Topology, genome: &Genome) -> String {
    let mut s = String::from("gridbroker-genome v1\n");
    match *topology {
        Topology::Layered { inputs, hidden, outputs } => {
            let _ = writeln!(s, "topology layered");
            let _ = writeln!(s, "inputs {inputs}");
            let _ = writeln!(s, "hidden {hidden}");
            let _ = writeln!(s, "outputs {outputs}");
        }
        Topology::FullyConnected { neurons, internal_steps, inputs, outputs } => {
            let _ = writeln!(s, "topology fully_connected");
            let _ = writeln!(s, "inputs {inputs}");
            let _ = writeln!(s, "neurons {neurons}");
            let _ = writeln!(s, "internal_steps {internal_steps}");
            let _ = writeln!(s, "outputs {outputs}");
        }
    }
    let _ = writeln!(s, "genes {}", genome.len());
    for g in &genome.genes {
        let _ = writeln!(s, "{g}");
    }
    s
}

/// Parse a genome checkpoint.
pub fn checkpoint_from_str(text: &str) -> Result<(Topology, Genome)> {
    let mut lines = text.lines();
    let bad = |msg: String| Error::Checkpoint(msg);
    let header = lines.next().ok_or_else(|| bad("empty checkpoint".into()))?;
    if header != "gridbroker-genome v1" {
        return Err(bad(format!("unknown header {header:?}")));
    }
    let mut fields = std::collections::BTreeMap::new();
    let mut gene_count: Option<usize> = None;
    for line in lines.by_ref() {
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| bad(format!("malformed field line {line:?}")))?;
        if key == "genes" {
            gene_count = Some(
                value.parse().map_err(|_| bad(format!("bad gene count {value:?}")))?,
            );
            break;
        }
        fields.insert(key.to_string(), value.to_string());
    }
    let gene_count = gene_count.ok_or_else(|| bad("missing genes field".into()))?;
    let get_num = |key: &str| -> Result<usize> {
        fields
            .get(key)
            .ok_or_else(|| bad(format!("missing field {key}")))?
            .parse()
            .map_err(|_| bad(format!("bad value for {key}")))
    };
    let topology = match fields.get("topology").map(String::as_str) {
        Some("layered") => Topology::Layered {
            inputs: get_num("inputs")?,
            hidden: get_num("hidden")?,
            outputs: get_num("outputs")?,
        },
        Some("fully_connected") => Topology::FullyConnected {
            neurons: get_num("neurons")?,
            internal_steps: get_num("internal_steps")?,
            inputs: get_num("inputs")?,
            outputs: get_num("outputs")?,
        },
        other => return Err(bad(format!("unknown topology {other:?}"))),
    };
    topology.validate()?;
    let mut genes = Vec::with_capacity(gene_count);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let g: f64 = line.parse().map_err(|_| bad(format!("bad gene {line:?}")))?;
        genes.push(g);
    }
    if genes.len() != gene_count {
        return Err(bad(format!("expected {gene_count} genes, found {}", genes.len())));
    }
    let genome = Genome { genes };
    genome.matches(&topology)?;
    Ok((topology, genome))
}

/// Write a checkpoint file.
pub fn save_checkpoint(path: &Path, topology: &Topology, genome: &Genome) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(topology, genome)).map_err(|e| Error::io(path, e))
}

/// Read a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<(Topology, Genome)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}
