//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MADGAN01"  u32 version
//! repeated:   [u8; 4] tag   u64 payload length   payload
//! ```
//!
//! Tensors are a `u32` rank, `u64` dims, then raw `f64` values, so a load
//! reproduces every parameter bit for bit. Sections: `CONF` (run config
//! text), `META`, `NORM`, optional `PROJ`, `GENR`, `DISC`, `TLOG`, optional
//! `CALI`.

use std::path::Path;

use crate::dataset::{NormalizationState, PcaState, Preprocessor, Projection};
use crate::detector::{Calibration, ScoreRange};
use crate::error::{Error, Result};
use crate::gan::{EpochLog, GanModel};
use crate::lstm::{LstmDims, LstmStackParams};

pub const MAGIC: &[u8; 8] = b"MADGAN01";
pub const VERSION: u32 = 1;

/// A trained model plus the configuration text it was trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config_text: String,
    pub model: GanModel,
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn tensor(&mut self, shape: &[usize], data: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.u32(shape.len() as u32);
        for &d in shape {
            self.usize(d);
        }
        for &v in data {
            self.f64(v);
        }
    }

    fn vector(&mut self, data: &[f64]) {
        self.tensor(&[data.len()], data);
    }

    fn section(&mut self, tag: &[u8; 4], body: Writer) {
        self.0.extend_from_slice(tag);
        self.usize(body.0.len());
        self.0.extend_from_slice(&body.0);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], what: &'static str) -> Self {
        Reader { buf, pos: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Checkpoint(format!(
                    "{} truncated at byte {} (wanted {n} more)",
                    self.what, self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| {
            Error::Checkpoint(format!("{}: size {v} does not fit in memory", self.what))
        })
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn tensor(&mut self) -> Result<(Vec<usize>, Vec<f64>)> {
        let rank = self.u32()? as usize;
        let shape = (0..rank)
            .map(|_| self.usize())
            .collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| {
                n.checked_mul(8)
                    .is_some_and(|b| b <= self.buf.len() - self.pos)
            })
            .ok_or_else(|| {
                Error::Checkpoint(format!(
                    "{}: tensor shape {shape:?} exceeds the section",
                    self.what
                ))
            })?;
        let data = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok((shape, data))
    }

    fn vector(&mut self) -> Result<Vec<f64>> {
        let (shape, data) = self.tensor()?;
        if shape.len() != 1 {
            return Err(Error::Checkpoint(format!(
                "{}: expected a vector, got shape {shape:?}",
                self.what
            )));
        }
        Ok(data)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "{}: {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn write_network(p: &LstmStackParams) -> Writer {
    let mut w = Writer::default();
    let d = p.dims();
    for v in [d.input_dim, d.hidden, d.depth, d.output_dim] {
        w.usize(v);
    }
    w.vector(p.as_slice());
    w
}

fn read_network(r: &mut Reader) -> Result<LstmStackParams> {
    let dims = LstmDims {
        input_dim: r.usize()?,
        hidden: r.usize()?,
        depth: r.usize()?,
        output_dim: r.usize()?,
    };
    let data = r.vector()?;
    LstmStackParams::from_flat(dims, data)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", r.what)))
}

fn write_normalization(w: &mut Writer, n: &NormalizationState) {
    w.vector(&n.min);
    w.vector(&n.max);
}

fn read_normalization(r: &mut Reader) -> Result<NormalizationState> {
    let (min, max) = (r.vector()?, r.vector()?);
    if min.len() != max.len() {
        return Err(Error::Checkpoint(format!(
            "{}: min/max lengths differ",
            r.what
        )));
    }
    Ok(NormalizationState { min, max })
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut out = Writer(MAGIC.to_vec());
        out.u32(VERSION);

        out.section(b"CONF", Writer(self.config_text.as_bytes().to_vec()));

        let mut meta = Writer::default();
        meta.usize(m.latent_dim);
        meta.usize(m.window);
        meta.usize(m.step);
        out.section(b"META", meta);

        let mut norm = Writer::default();
        write_normalization(&mut norm, &m.preprocessor.normalization);
        out.section(b"NORM", norm);

        if let Some(p) = &m.preprocessor.projection {
            let mut proj = Writer::default();
            proj.vector(&p.pca.mean);
            proj.tensor(
                &[p.pca.num_components(), p.pca.num_vars()],
                &p.pca.components,
            );
            proj.vector(&p.pca.variance_ratio);
            write_normalization(&mut proj, &p.rescale);
            out.section(b"PROJ", proj);
        }

        out.section(b"GENR", write_network(&m.generator));
        out.section(b"DISC", write_network(&m.discriminator));

        let mut log = Writer::default();
        log.usize(m.training_log.len());
        for e in &m.training_log {
            log.usize(e.epoch);
            log.f64(e.d_loss);
            log.f64(e.g_loss);
            log.f64(e.mmd);
        }
        out.section(b"TLOG", log);

        if let Some(c) = &m.calibration {
            let mut cal = Writer::default();
            for v in [c.residual_range.min, c.residual_range.max] {
                cal.f64(v);
            }
            for v in [c.discrimination_range.min, c.discrimination_range.max] {
                cal.f64(v);
            }
            cal.f64(c.lambda);
            cal.vector(&c.drs_quantiles);
            out.section(b"CALI", cal);
        }
        out.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "header");
        if r.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
            return Err(Error::Checkpoint(
                "not a model checkpoint (bad magic)".into(),
            ));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }

        let mut config_text = None;
        let mut meta = None;
        let mut normalization = None;
        let mut projection = None;
        let mut generator = None;
        let mut discriminator = None;
        let mut training_log = None;
        let mut calibration = None;
        while r.pos < bytes.len() {
            let tag: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
            let len = r.usize()?;
            let body = r.take(len)?;
            let name = std::str::from_utf8(&tag).unwrap_or("????");
            let mut s = Reader::new(body, "section");
            match &tag {
                b"CONF" => {
                    let text = String::from_utf8(body.to_vec())
                        .map_err(|_| Error::Checkpoint("config section is not UTF-8".into()))?;
                    s.pos = body.len();
                    config_text = Some(text);
                }
                b"META" => meta = Some((s.usize()?, s.usize()?, s.usize()?)),
                b"NORM" => normalization = Some(read_normalization(&mut s)?),
                b"PROJ" => {
                    let mean = s.vector()?;
                    let (shape, components) = s.tensor()?;
                    let variance_ratio = s.vector()?;
                    let rescale = read_normalization(&mut s)?;
                    if shape.len() != 2 || shape[1] != mean.len() {
                        return Err(Error::Checkpoint(format!(
                            "PROJ: bad component shape {shape:?}"
                        )));
                    }
                    let pca = PcaState::from_parts(mean, components, variance_ratio)
                        .map_err(|e| Error::Checkpoint(format!("PROJ: {e}")))?;
                    projection = Some(Projection { pca, rescale });
                }
                b"GENR" => generator = Some(read_network(&mut s)?),
                b"DISC" => discriminator = Some(read_network(&mut s)?),
                b"TLOG" => {
                    let n = s.usize()?;
                    let mut log = Vec::new();
                    for _ in 0..n {
                        log.push(EpochLog {
                            epoch: s.usize()?,
                            d_loss: s.f64()?,
                            g_loss: s.f64()?,
                            mmd: s.f64()?,
                        });
                    }
                    training_log = Some(log);
                }
                b"CALI" => {
                    let residual_range = ScoreRange {
                        min: s.f64()?,
                        max: s.f64()?,
                    };
                    let discrimination_range = ScoreRange {
                        min: s.f64()?,
                        max: s.f64()?,
                    };
                    let lambda = s.f64()?;
                    calibration = Some(Calibration {
                        residual_range,
                        discrimination_range,
                        lambda,
                        drs_quantiles: s.vector()?,
                    });
                }
                _ => return Err(Error::Checkpoint(format!("unknown section {name:?}"))),
            }
            s.finish()
                .map_err(|e| Error::Checkpoint(format!("section {name}: {e}")))?;
        }

        let missing = |what: &str| Error::Checkpoint(format!("missing {what} section"));
        let (latent_dim, window, step) = meta.ok_or_else(|| missing("META"))?;
        let model = GanModel {
            generator: generator.ok_or_else(|| missing("GENR"))?,
            discriminator: discriminator.ok_or_else(|| missing("DISC"))?,
            latent_dim,
            window,
            step,
            preprocessor: Preprocessor {
                normalization: normalization.ok_or_else(|| missing("NORM"))?,
                projection,
            },
            training_log: training_log.ok_or_else(|| missing("TLOG"))?,
            calibration,
        };
        model
            .validate()
            .map_err(|e| Error::Checkpoint(format!("inconsistent model: {e}")))?;
        Ok(Checkpoint {
            config_text: config_text.ok_or_else(|| missing("CONF"))?,
            model,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_windows, MultivariateSeries, PcSelection};
    use crate::gan::{train, TrainConfig};
    use crate::numerics::SeededRng;

    fn tiny_model(pcs: PcSelection) -> GanModel {
        let mut rng = SeededRng::new(4);
        let v: Vec<f64> = (0..240)
            .map(|i| (i as f64 * 0.1).sin() + 0.1 * rng.normal())
            .collect();
        let s = MultivariateSeries::from_values(v, 3).unwrap();
        let pre = Preprocessor::fit(&s, pcs).unwrap();
        let w = make_windows(&pre.apply(&s).unwrap(), 8, 4).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            latent_dim: 2,
            gen_hidden: 3,
            gen_depth: 2,
            disc_hidden: 3,
            mmd_samples: 4,
            ..TrainConfig::default()
        };
        train(&w, pre, &cfg, SeededRng::new(1)).unwrap()
    }

    fn bits(m: &GanModel) -> Vec<u64> {
        m.generator
            .as_slice()
            .iter()
            .chain(m.discriminator.as_slice())
            .map(|v| v.to_bits())
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for pcs in [PcSelection::Off, PcSelection::Count(2)] {
            let mut model = tiny_model(pcs);
            model.calibration = Some(Calibration {
                residual_range: ScoreRange {
                    min: 0.1,
                    max: 2.0 / 3.0,
                },
                discrimination_range: ScoreRange {
                    min: 1e-300,
                    max: 7.0,
                },
                lambda: 0.3,
                drs_quantiles: vec![0.0, 0.5, 1.0],
            });
            let ck = Checkpoint {
                config_text: "window = 8\n".into(),
                model,
            };
            let bytes = ck.to_bytes();
            assert_eq!(&bytes[..8], MAGIC);
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back, ck);
            assert_eq!(bits(&back.model), bits(&ck.model));
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let ck = Checkpoint {
            config_text: String::new(),
            model: tiny_model(PcSelection::Off),
        };
        let bytes = ck.to_bytes();
        assert!(Checkpoint::from_bytes(b"NOTACKPT\x01\0\0\0").is_err());
        for cut in [4, 12, 40, bytes.len() - 1] {
            assert!(
                Checkpoint::from_bytes(&bytes[..cut]).is_err(),
                "cut at {cut}"
            );
        }
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert!(
            matches!(Checkpoint::from_bytes(&wrong_version), Err(Error::Checkpoint(m)) if m.contains("version"))
        );
        let mut unknown = bytes.clone();
        unknown.extend_from_slice(b"XTRA\0\0\0\0\0\0\0\0");
        assert!(Checkpoint::from_bytes(&unknown).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = Checkpoint {
            config_text: "seed = 3\n".into(),
            model: tiny_model(PcSelection::Off),
        };
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        assert!(Checkpoint::load(dir.path().join("missing")).is_err());
    }
}
