//! Observation traces and the `DFTR` file format:
//! `"DFTR" | version u16 | rows u32 | cols u16 (=128) | rows×cols raw bytes`,
//! integers little-endian.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvConfig, EnvError, Mode, OBS_BYTES};

pub const TRACE_MAGIC: &[u8; 4] = b"DFTR";
pub const TRACE_VERSION: u16 = 1;
const HEADER_LEN: usize = 12;

/// Time-ordered rows of 128 raw bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RamTrace {
    rows: Vec<[u8; OBS_BYTES]>,
}

impl RamTrace {
    pub fn new(rows: Vec<[u8; OBS_BYTES]>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[[u8; OBS_BYTES]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: [u8; OBS_BYTES]) {
        self.rows.push(row);
    }

    /// Values of one byte across time.
    pub fn column(&self, byte: usize) -> impl Iterator<Item = u8> + '_ {
        self.rows.iter().map(move |r| r[byte])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.rows.len() * OBS_BYTES);
        out.extend_from_slice(TRACE_MAGIC);
        out.extend_from_slice(&TRACE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows.len() as u32).to_le_bytes());
        out.extend_from_slice(&(OBS_BYTES as u16).to_le_bytes());
        for row in &self.rows {
            out.extend_from_slice(row);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvError> {
        if bytes.len() < HEADER_LEN {
            return Err(EnvError::Trace("truncated header".into()));
        }
        if &bytes[..4] != TRACE_MAGIC {
            return Err(EnvError::Trace("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != TRACE_VERSION {
            return Err(EnvError::Trace(format!("unsupported version {version}")));
        }
        let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let cols = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
        if cols != OBS_BYTES {
            return Err(EnvError::Trace(format!("expected {OBS_BYTES} columns, found {cols}")));
        }
        let body = &bytes[HEADER_LEN..];
        if body.len() != rows * OBS_BYTES {
            return Err(EnvError::Trace(format!(
                "payload holds {} bytes, header promises {}",
                body.len(),
                rows * OBS_BYTES
            )));
        }
        Ok(Self {
            rows: body
                .chunks_exact(OBS_BYTES)
                .map(|c| c.try_into().unwrap())
                .collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), EnvError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Both players act uniformly at random for `steps` decisions; returns
/// player 1's raw observation before each decision. Episodes auto-reset.
pub fn random_rollout(config: &EnvConfig, steps: usize, seed: u64) -> Result<RamTrace, EnvError> {
    if config.mode != Mode::TwoPlayer {
        return Err(EnvError::Config("random rollouts run in two-player mode".into()));
    }
    let mut env = Env::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = env.action_count();
    let mut trace = RamTrace::new(Vec::with_capacity(steps));
    env.reset();
    for _ in 0..steps {
        trace.push(env.raw_observation().0);
        let a = [rng.gen_range(0..actions) as u8, rng.gen_range(0..actions) as u8];
        if env.step(&a)?.done() {
            env.reset();
        }
    }
    Ok(trace)
}
