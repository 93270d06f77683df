//! Label layouts and the network-backed logical decoder.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::Array2;

use super::mlp::Mlp;
use crate::decoders::LogicalDecoder;
use crate::error::{Error, Result};
use crate::exrec::KEY_BITS;
use crate::logical::LogicalPauli2;
use crate::pieceable::Orientation;

/// Which logical bits the binary heads predict, in control/target terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LabelSet {
    /// `gX` = X̄ on the target, `gZ` = Z̄ on the control. These are the
    /// channels CNOT propagation feeds, and carry most single-fault failures.
    Pair,
    /// X̄ and Z̄ on both blocks.
    #[default]
    Full,
}

impl LabelSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            Self::Pair => &["gX", "gZ"],
            Self::Full => &["xc", "zc", "xt", "zt"],
        }
    }

    pub fn heads(self) -> usize {
        self.names().len()
    }

    /// Label bits of a logical error; bit `h` belongs to head `h`.
    pub fn encode(self, e: LogicalPauli2, o: Orientation) -> u8 {
        let (xc, zc) = e.on(o.control());
        let (xt, zt) = e.on(o.target());
        match self {
            Self::Pair => xt as u8 | (zc as u8) << 1,
            Self::Full => xc as u8 | (zc as u8) << 1 | (xt as u8) << 2 | (zt as u8) << 3,
        }
    }

    pub fn decode(self, bits: u8, o: Orientation) -> LogicalPauli2 {
        let b = |i: u8| bits >> i & 1 == 1;
        let (c, t) = match self {
            Self::Pair => ((false, b(1)), (b(0), false)),
            Self::Full => ((b(0), b(1)), (b(2), b(3))),
        };
        LogicalPauli2::I.with_block(o.control(), c).with_block(o.target(), t)
    }
}

impl FromStr for LabelSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" | "2" => Ok(Self::Pair),
            "full" | "4" => Ok(Self::Full),
            _ => Err(Error::Config(format!("unknown label set {s:?}, expected pair or full"))),
        }
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pair => "pair",
            Self::Full => "full",
        })
    }
}

/// Key bits as network input, `s_lec` bit 0 first.
pub fn key_features(key: u64, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (key >> i & 1) as f64;
    }
}

/// One binary network per label bit.
#[derive(Clone, Debug, PartialEq)]
pub struct NnDecoder {
    pub orientation: Orientation,
    pub labels: LabelSet,
    pub heads: Vec<Mlp>,
}

impl NnDecoder {
    pub fn new(orientation: Orientation, labels: LabelSet, heads: Vec<Mlp>) -> Result<Self> {
        if heads.len() != labels.heads() {
            return Err(Error::DimensionMismatch { left: heads.len(), right: labels.heads() });
        }
        for h in &heads {
            if h.input_dim() != KEY_BITS || h.output_dim() != 2 {
                return Err(Error::Config(format!("head dims {:?} do not map {KEY_BITS} bits to 2 classes", h.dims())));
            }
        }
        Ok(Self { orientation, labels, heads })
    }

    /// Predicted label bits for a batch of keys.
    pub fn predict_bits(&self, keys: &[u64]) -> Result<Vec<u8>> {
        let mut bits = vec![0u8; keys.len()];
        // bounded chunks keep the widest activation matrix small
        for (chunk, out) in keys.chunks(2048).zip(bits.chunks_mut(2048)) {
            let mut x = Array2::zeros((chunk.len(), KEY_BITS));
            for (row, &k) in x.rows_mut().into_iter().zip(chunk) {
                if let Some(s) = row.into_slice() {
                    key_features(k, s);
                }
            }
            for (h, model) in self.heads.iter().enumerate() {
                for (b, class) in out.iter_mut().zip(model.predict(x.view())?) {
                    *b |= (class as u8) << h;
                }
            }
        }
        Ok(bits)
    }

    /// Saves all heads in one file: a header line, then each checkpoint.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "pftconv-nn-decoder 1 orientation={} labels={} heads={}", self.orientation.name(), self.labels, self.heads.len())?;
        for h in &self.heads {
            h.save(&mut w)?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(mut r: R) -> Result<Self> {
        let mut head = String::new();
        r.read_line(&mut head)?;
        let mut fields = head.split_whitespace();
        if fields.next() != Some("pftconv-nn-decoder") || fields.next() != Some("1") {
            return Err(Error::Format("not a decoder checkpoint".into()));
        }
        let (mut orientation, mut labels, mut count) = (None, None, None);
        for f in fields {
            match f.split_once('=') {
                Some(("orientation", v)) => orientation = Some(v.parse::<Orientation>()?),
                Some(("labels", v)) => labels = Some(v.parse::<LabelSet>()?),
                Some(("heads", v)) => count = v.parse::<usize>().ok(),
                _ => return Err(Error::Format(format!("unknown decoder field {f:?}"))),
            }
        }
        let (Some(orientation), Some(labels), Some(count)) = (orientation, labels, count) else {
            return Err(Error::Format("decoder header is incomplete".into()));
        };
        // Each head is a self-delimiting checkpoint; split on its magic line.
        let mut rest = String::new();
        r.read_to_string(&mut rest)?;
        let mut starts: Vec<usize> = rest.match_indices("pftconv-mlp ").map(|(i, _)| i).collect();
        starts.push(rest.len());
        if starts.len() != count + 1 {
            return Err(Error::Format(format!("expected {count} heads, found {}", starts.len() - 1)));
        }
        let heads = starts.windows(2).map(|w| Mlp::load(rest[w[0]..w[1]].as_bytes())).collect::<Result<Vec<_>>>()?;
        Self::new(orientation, labels, heads)
    }
}

impl LogicalDecoder for NnDecoder {
    fn correction(&self, key: u64) -> LogicalPauli2 {
        self.corrections(&[key])[0]
    }

    fn corrections(&self, keys: &[u64]) -> Vec<LogicalPauli2> {
        match self.predict_bits(keys) {
            Ok(bits) => bits.into_iter().map(|b| self.labels.decode(b, self.orientation)).collect(),
            Err(_) => vec![LogicalPauli2::I; keys.len()],
        }
    }

    fn name(&self) -> String {
        "nn".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_labels_round_trip() {
        for o in [Orientation::A, Orientation::B] {
            for e in LogicalPauli2::all() {
                assert_eq!(LabelSet::Full.decode(LabelSet::Full.encode(e, o), o), e);
            }
        }
    }

    #[test]
    fn pair_labels_keep_contagious_channels() {
        let o = Orientation::A;
        // X̄ on the RM15 target and Z̄ on the Steane control
        assert_eq!(LabelSet::Pair.encode(LogicalPauli2::X_RM15, o), 0b01);
        assert_eq!(LabelSet::Pair.encode(LogicalPauli2::Z_STEANE, o), 0b10);
        assert_eq!(LabelSet::Pair.encode(LogicalPauli2::X_STEANE ^ LogicalPauli2::Z_RM15, o), 0);
        let b = Orientation::B;
        assert_eq!(LabelSet::Pair.decode(0b11, b), LogicalPauli2::X_STEANE ^ LogicalPauli2::Z_RM15);
    }

    #[test]
    fn untrained_symmetric_decoder_corrects_nothing() {
        let heads = vec![Mlp::zeros(&[KEY_BITS, 4, 2]).unwrap(); 4];
        let d = NnDecoder::new(Orientation::A, LabelSet::Full, heads).unwrap();
        assert_eq!(d.corrections(&[0, 5, 1 << 46]), vec![LogicalPauli2::I; 3]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let heads = (0..2).map(|_| Mlp::new(&[KEY_BITS, 3, 2], &mut rng).unwrap()).collect();
        let d = NnDecoder::new(Orientation::B, LabelSet::Pair, heads).unwrap();
        let mut buf = Vec::new();
        d.save(&mut buf).unwrap();
        assert_eq!(NnDecoder::load(buf.as_slice()).unwrap(), d);
        assert!(NnDecoder::new(Orientation::B, LabelSet::Full, d.heads.clone()).is_err());
    }
}
