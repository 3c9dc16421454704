//! Binary persistence for posterior draws, keyed by (run id, chain, sweep).

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bvar::{LambdaMode, PosteriorDraw, PosteriorSample};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NGBD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StoreMeta {
    pub run_id: String,
    pub m: usize,
    pub p: usize,
    pub keep: usize,
    pub chains: usize,
    pub lambda_mode: LambdaMode,
}

pub fn save_draws(path: &Path, run_id: &str, sample: &PosteriorSample) -> Result<()> {
    let meta = StoreMeta {
        run_id: run_id.to_string(),
        m: sample.m,
        p: sample.p,
        keep: sample.keep,
        chains: sample.chains,
        lambda_mode: sample.lambda_mode,
    };
    let meta_json = serde_json::to_vec(&meta)?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(meta_json.len() as u32)?;
    w.write_all(&meta_json)?;
    for d in &sample.draws {
        w.write_u32::<LittleEndian>(d.chain as u32)?;
        w.write_u32::<LittleEndian>(d.sweep as u32)?;
        for v in d.a.iter() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        for row in &d.h_free {
            for v in row {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        for v in d.s.iter() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        for v in &d.zeta {
            w.write_f64::<LittleEndian>(*v)?;
        }
        w.write_f64::<LittleEndian>(d.zeta_cov)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_draws(path: &Path) -> Result<(StoreMeta, PosteriorSample)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Input(format!(
            "{} is not a draw store",
            path.display()
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Input(format!("unsupported store version {version}")));
    }
    let meta_len = r.read_u32::<LittleEndian>()? as usize;
    let mut meta_json = vec![0u8; meta_len];
    r.read_exact(&mut meta_json)?;
    let meta: StoreMeta = serde_json::from_slice(&meta_json)?;

    let total = meta.keep * meta.chains;
    let (m, p) = (meta.m, meta.p);
    let mut draws = Vec::with_capacity(total);
    for _ in 0..total {
        let chain = r.read_u32::<LittleEndian>()? as usize;
        let sweep = r.read_u32::<LittleEndian>()? as usize;
        let mut a = DMatrix::zeros(m, m * p);
        // column-major to mirror DMatrix::iter on write
        for c in 0..m * p {
            for row in 0..m {
                a[(row, c)] = r.read_f64::<LittleEndian>()?;
            }
        }
        let mut h_free = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = vec![0.0; i];
            for v in row.iter_mut() {
                *v = r.read_f64::<LittleEndian>()?;
            }
            h_free.push(row);
        }
        let mut s = DVector::zeros(m);
        for v in s.iter_mut() {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let mut zeta = vec![0.0; p];
        for v in zeta.iter_mut() {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let zeta_cov = r.read_f64::<LittleEndian>()?;
        draws.push(PosteriorDraw {
            chain,
            sweep,
            a,
            h_free,
            s,
            zeta,
            zeta_cov,
        });
    }
    let sample = PosteriorSample::from_draws(m, p, meta.keep, meta.chains, meta.lambda_mode, draws);
    Ok((meta, sample))
}
