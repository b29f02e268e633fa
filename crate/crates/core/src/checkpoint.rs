//! Versioned binary checkpoints.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header (config, scaler, optimizer scalars, RNG state), then four
//! length-prefixed little-endian `f64` arrays: online, target, Adam first and
//! second moments. Saving a loaded checkpoint reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig};
use crate::critic::{AdamW, CriticParams};
use crate::error::{Error, Result};
use crate::replay::ActionScaler;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"C2FQCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    step: usize,
    updates: u64,
    obs_dim: usize,
    action_dim: usize,
    config: AgentConfig,
    scaler: Option<ActionScaler>,
    adam: AdamScalars,
    rng: RngState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AdamScalars {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: [u8; 32],
    stream: u64,
    /// u128 as a decimal string.
    word_pos: String,
}

pub fn encode_checkpoint(agent: &Agent, step: usize) -> Result<Vec<u8>> {
    let opt = agent.optimizer();
    let rng = agent.rng();
    let header = Header {
        step,
        updates: agent.updates(),
        obs_dim: agent.obs_dim(),
        action_dim: agent.space().dims,
        config: agent.config().clone(),
        scaler: agent.scaler().cloned(),
        adam: AdamScalars {
            lr: opt.lr,
            beta1: opt.beta1,
            beta2: opt.beta2,
            eps: opt.eps,
            weight_decay: opt.weight_decay,
            step: opt.step,
        },
        rng: RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        },
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let critic = agent.critic();
    for array in [critic.online(), critic.target(), &opt.m, &opt.v] {
        out.extend_from_slice(&(array.len() as u64).to_le_bytes());
        for x in array {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn array(&mut self) -> Result<Vec<f64>> {
        let n = usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("array too long".into()))?;
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("array too long".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Rebuild the agent and the environment step it was saved at.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Agent, usize)> {
    let mut r = Reader { bytes };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let len = usize::try_from(r.u64()?).map_err(|_| Error::Checkpoint("header too long".into()))?;
    let header: Header = serde_json::from_slice(r.take(len)?)?;
    let online = r.array()?;
    let target = r.array()?;
    let m = r.array()?;
    let v = r.array()?;
    if !r.bytes.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.bytes.len())));
    }

    let mut agent = Agent::new(header.config, header.obs_dim, header.action_dim, header.scaler)?;
    let critic = CriticParams::from_parts(agent.critic().spec().clone(), online, target)?;
    if m.len() != critic.num_params() || v.len() != critic.num_params() {
        return Err(Error::Checkpoint("optimizer state does not match the critic".into()));
    }
    let a = header.adam;
    let optimizer = AdamW {
        lr: a.lr,
        beta1: a.beta1,
        beta2: a.beta2,
        eps: a.eps,
        weight_decay: a.weight_decay,
        step: a.step,
        m,
        v,
    };
    let mut rng = ChaCha8Rng::from_seed(header.rng.seed);
    rng.set_stream(header.rng.stream);
    let word_pos = header
        .rng
        .word_pos
        .parse::<u128>()
        .map_err(|e| Error::Checkpoint(format!("rng position: {e}")))?;
    rng.set_word_pos(word_pos);
    agent.restore(critic, optimizer, rng, header.updates)?;
    Ok((agent, header.step))
}

pub fn save_checkpoint(path: &Path, agent: &Agent, step: usize) -> Result<()> {
    let bytes = encode_checkpoint(agent, step)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(Agent, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
