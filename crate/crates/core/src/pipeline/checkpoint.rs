//! Binary checkpoints with bitwise round-trip.
//!
//! Fixed-order little-endian sections: magic, format version, config
//! digest, network shape, group table, f64 parameter blob, optimizer
//! state, rng/batch cursors, metrics tail. A JSON sidecar (`<path>.json`)
//! records the digest and stage for humans and tooling. Readers reject
//! trailing bytes and report byte offsets on malformation.

use std::fs;
use std::path::{Path, PathBuf};

use crate::datakit::batch::BatchCursor;
use crate::error::{Error, Result};
use crate::model::{NetConfig, ParamGroup, StudentNet};
use crate::pipeline::optimizer::{AdamWConfig, OptimizerState};

const MAGIC: &[u8; 4] = b"DFC1";
const VERSION: u32 = 1;

/// Everything needed to resume a run bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config_digest: u64,
    pub net_config: NetConfig,
    pub params: Vec<f64>,
    pub optimizer: OptimizerState,
    pub steps_done: u64,
    pub batch_cursor: BatchCursor,
    pub stage: u8,
    pub metrics_tail: String,
}

impl Checkpoint {
    pub fn restore_net(&self) -> Result<StudentNet> {
        let mut net = StudentNet::new(self.net_config.clone())?;
        if net.param_count() != self.params.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} parameters, config expects {}",
                self.params.len(),
                net.param_count()
            )));
        }
        net.set_from_flat(&self.params);
        Ok(net)
    }
}

/// FNV-1a over a canonical string; stable across platforms.
pub fn digest_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&ckpt.config_digest.to_le_bytes());
    buf.push(ckpt.stage);

    let nc = &ckpt.net_config;
    for dim in [nc.base_dim, nc.hidden_dim, nc.tail_layers, nc.vision_dim] {
        buf.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for dim in nc.head_dims {
        buf.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    buf.extend_from_slice(&nc.seed.to_le_bytes());

    // Group table: derived spans, stored for inspection tools.
    let net = StudentNet::new(nc.clone())?;
    let spans = net.group_spans();
    buf.push(spans.len() as u8);
    for (group, range) in &spans {
        let name = group.name().as_bytes();
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.extend_from_slice(&(range.start as u64).to_le_bytes());
        buf.extend_from_slice(&(range.len() as u64).to_le_bytes());
    }

    write_f64_blob(&mut buf, &ckpt.params);

    let opt = &ckpt.optimizer;
    buf.extend_from_slice(&opt.step.to_le_bytes());
    for v in [opt.cfg.beta1, opt.cfg.beta2, opt.cfg.eps, opt.cfg.weight_decay] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    write_f64_blob(&mut buf, &opt.m);
    write_f64_blob(&mut buf, &opt.v);

    buf.extend_from_slice(&ckpt.steps_done.to_le_bytes());
    buf.extend_from_slice(&ckpt.batch_cursor.epoch.to_le_bytes());
    buf.extend_from_slice(&ckpt.batch_cursor.pos.to_le_bytes());

    let tail = ckpt.metrics_tail.as_bytes();
    buf.extend_from_slice(&(tail.len() as u32).to_le_bytes());
    buf.extend_from_slice(tail);

    fs::write(path, &buf)?;

    let sidecar = serde_json::json!({
        "format_version": VERSION,
        "config_digest": format!("{:016x}", ckpt.config_digest),
        "stage": ckpt.stage,
        "steps_done": ckpt.steps_done,
        "param_count": ckpt.params.len(),
    });
    fs::write(sidecar_path(path), format!("{sidecar}\n"))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };

    if r.take(4, "magic")? != MAGIC {
        return Err(Error::FormatError {
            offset: 0,
            msg: "bad magic (expected DFC1)".into(),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    let config_digest = r.u64("config digest")?;
    let stage = r.take(1, "stage")?[0];

    let base_dim = r.u32("base_dim")? as usize;
    let hidden_dim = r.u32("hidden_dim")? as usize;
    let tail_layers = r.u32("tail_layers")? as usize;
    let vision_dim = r.u32("vision_dim")? as usize;
    let mut head_dims = [0usize; 4];
    for d in &mut head_dims {
        *d = r.u32("head dim")? as usize;
    }
    let seed = r.u64("net seed")?;
    let net_config = NetConfig {
        base_dim,
        hidden_dim,
        tail_layers,
        head_dims,
        vision_dim,
        seed,
    };

    let n_groups = r.take(1, "group count")?[0] as usize;
    for _ in 0..n_groups {
        let name_len = r.u16("group name length")? as usize;
        let name_bytes = r.take(name_len, "group name")?;
        let name = std::str::from_utf8(name_bytes).map_err(|_| Error::FormatError {
            offset: r.pos as u64,
            msg: "group name is not UTF-8".into(),
        })?;
        if ParamGroup::from_name(name).is_none() {
            return Err(Error::FormatError {
                offset: r.pos as u64,
                msg: format!("unknown parameter group {name}"),
            });
        }
        r.u64("group offset")?;
        r.u64("group length")?;
    }

    let params = r.f64_blob("parameters")?;

    let step = r.u64("optimizer step")?;
    let beta1 = r.f64("beta1")?;
    let beta2 = r.f64("beta2")?;
    let eps = r.f64("eps")?;
    let weight_decay = r.f64("weight decay")?;
    let m = r.f64_blob("first moments")?;
    let v = r.f64_blob("second moments")?;
    let optimizer = OptimizerState {
        cfg: AdamWConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        },
        step,
        m,
        v,
    };

    let steps_done = r.u64("steps done")?;
    let batch_cursor = BatchCursor {
        epoch: r.u64("batch epoch")?,
        pos: r.u64("batch pos")?,
    };

    let tail_len = r.u32("metrics tail length")? as usize;
    let tail_bytes = r.take(tail_len, "metrics tail")?;
    let metrics_tail = String::from_utf8(tail_bytes.to_vec()).map_err(|_| Error::FormatError {
        offset: r.pos as u64,
        msg: "metrics tail is not UTF-8".into(),
    })?;

    if r.pos != bytes.len() {
        return Err(Error::FormatError {
            offset: r.pos as u64,
            msg: "trailing bytes".into(),
        });
    }

    Ok(Checkpoint {
        version,
        config_digest,
        net_config,
        params,
        optimizer,
        steps_done,
        batch_cursor,
        stage,
        metrics_tail,
    })
}

fn write_f64_blob(buf: &mut Vec<u8>, values: &[f64]) {
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::FormatError {
                offset: self.pos as u64,
                msg: format!("truncated {what}"),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64_blob(&mut self, what: &str) -> Result<Vec<f64>> {
        let n = self.u64(what)? as usize;
        if n > (self.bytes.len() - self.pos) / 8 {
            return Err(Error::FormatError {
                offset: self.pos as u64 - 8,
                msg: format!("{what} length exceeds the file size"),
            });
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64(what)?);
        }
        Ok(out)
    }
}
