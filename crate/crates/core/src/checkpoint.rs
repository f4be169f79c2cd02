//! Checkpoint sets: one network per seat, stored as
//! `{dir}/{position}_{frames}.ckpt` with a JSON sidecar next to each.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cards::Seat;
use crate::error::{Error, Result};
use crate::valuenet::{self, NetParams, FORMAT_VERSION};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters of the four seat networks, shared read-only with actors.
pub type Snapshot = [Arc<NetParams<f32>>; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format_version: u32,
    pub code_version: String,
    pub position: String,
    pub frames: u64,
    pub episodes: u64,
    pub wall_s: f64,
    pub config_hash: String,
    pub behavior_flags: bool,
    pub hidden: usize,
    pub width: usize,
}

pub fn position_name(seat: Seat) -> String {
    seat.to_string()
}

pub fn checkpoint_path(dir: &Path, seat: Seat, frames: u64) -> PathBuf {
    dir.join(format!("{}_{frames}.ckpt", position_name(seat)))
}

pub fn sidecar_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("json")
}

/// Frame counts for which all four seat checkpoints exist, ascending.
pub fn complete_sets(dir: &Path) -> Result<Vec<u64>> {
    let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::Checkpoint {
        path: dir.into(),
        reason: e.to_string(),
    })?;
    for entry in entries {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(stem) = name.strip_suffix(".ckpt") else {
            continue;
        };
        let Some((pos, frames)) = stem.split_once('_') else {
            continue;
        };
        if Seat::ALL.iter().any(|s| position_name(*s) == pos) {
            if let Ok(f) = frames.parse::<u64>() {
                *seen.entry(f).or_default() += 1;
            }
        }
    }
    Ok(seen
        .into_iter()
        .filter(|(_, n)| *n == 4)
        .map(|(f, _)| f)
        .collect())
}

pub fn latest_set(dir: &Path) -> Result<Option<u64>> {
    Ok(complete_sets(dir)?.last().copied())
}

pub fn save_set(dir: &Path, nets: &[NetParams<f32>], sidecar: &Sidecar) -> Result<()> {
    fs::create_dir_all(dir)?;
    for seat in Seat::ALL {
        let path = checkpoint_path(dir, seat, sidecar.frames);
        valuenet::save(&nets[seat.index()], &path)?;
        let side = Sidecar {
            position: position_name(seat),
            ..sidecar.clone()
        };
        fs::write(
            sidecar_path(&path),
            serde_json::to_string_pretty(&side)? + "\n",
        )?;
    }
    Ok(())
}

pub fn read_sidecar(dir: &Path, seat: Seat, frames: u64) -> Result<Sidecar> {
    let path = sidecar_path(&checkpoint_path(dir, seat, frames));
    let text = fs::read_to_string(&path).map_err(|e| Error::Checkpoint {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let side: Sidecar = serde_json::from_str(&text)?;
    if side.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint {
            path,
            reason: format!("format version {}", side.format_version),
        });
    }
    Ok(side)
}

/// Loads the set at `frames`, or the latest complete set.
pub fn load_set(dir: &Path, frames: Option<u64>) -> Result<(Snapshot, Sidecar)> {
    let frames = match frames {
        Some(f) => f,
        None => latest_set(dir)?.ok_or_else(|| Error::Checkpoint {
            path: dir.into(),
            reason: "no complete checkpoint set".into(),
        })?,
    };
    let load = |seat: Seat| -> Result<Arc<NetParams<f32>>> {
        Ok(Arc::new(valuenet::load(&checkpoint_path(
            dir, seat, frames,
        ))?))
    };
    let nets = [
        load(Seat::ALL[0])?,
        load(Seat::ALL[1])?,
        load(Seat::ALL[2])?,
        load(Seat::ALL[3])?,
    ];
    if nets.iter().any(|n| n.shape != nets[0].shape) {
        return Err(Error::Checkpoint {
            path: dir.into(),
            reason: "seat networks differ in shape".into(),
        });
    }
    Ok((nets, read_sidecar(dir, Seat::ALL[0], frames)?))
}
