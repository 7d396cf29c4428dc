//! Channel description files and normalization of the three input forms.

use super::algebra::{DEFAULT_SEED, algebra_blocks, fixed_point_algebra};
use super::{Block, BlockIdempotent, Channel, Superoperator};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, partial_trace};
use crate::states::DensityMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Block,
    Choi,
    Kraus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub omega: DensityMatrix,
}

/// `{kind, dim, blocks?, basis_change?, choi?, kraus?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_change: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<ComplexMatrix>>,
}

/// A parsed channel: structured when it is an idempotent channel with full-rank unit image.
#[derive(Clone, Debug)]
pub enum AnyChannel {
    Block(BlockIdempotent),
    Dense(Superoperator),
}

impl ChannelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("channel description at line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_block(b: &BlockIdempotent) -> Self {
        Self {
            kind: ChannelKind::Block,
            dim: b.total_dim(),
            blocks: Some(
                b.blocks()
                    .iter()
                    .map(|x| BlockSpec { d_a: x.d_a, d_b: x.d_b, omega: x.omega.clone() })
                    .collect(),
            ),
            basis_change: Some(b.basis_change().clone()),
            choi: None,
            kraus: None,
        }
    }

    pub fn build(&self) -> Result<AnyChannel> {
        let ch = match self.kind {
            ChannelKind::Block => {
                let specs = self
                    .blocks
                    .as_ref()
                    .ok_or_else(|| Error::Parse("kind \"block\" requires a \"blocks\" list".into()))?;
                let blocks = specs
                    .iter()
                    .map(|s| Block::new(s.d_a, s.d_b, s.omega.clone()))
                    .collect::<Result<Vec<_>>>()?;
                let u = self.basis_change.clone().unwrap_or_else(|| ComplexMatrix::identity(self.dim));
                AnyChannel::Block(BlockIdempotent::new(u, blocks)?)
            }
            ChannelKind::Choi => {
                let j = self.choi.clone().ok_or_else(|| Error::Parse("kind \"choi\" requires a \"choi\" matrix".into()))?;
                AnyChannel::Dense(Superoperator::from_choi(j)?).normalize()
            }
            ChannelKind::Kraus => {
                let k = self.kraus.as_ref().ok_or_else(|| Error::Parse("kind \"kraus\" requires a \"kraus\" list".into()))?;
                AnyChannel::Dense(Superoperator::from_kraus(k)?).normalize()
            }
        };
        if ch.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!("declared dim {} but the channel acts on C^{}", self.dim, ch.dim())));
        }
        Ok(ch)
    }
}

impl AnyChannel {
    pub fn from_json(text: &str) -> Result<Self> {
        ChannelSpec::from_json(text)?.build()
    }

    /// Converts a dense channel to block form when it is idempotent with full-rank unit image.
    pub fn normalize(self) -> Self {
        match self {
            AnyChannel::Dense(s) => match BlockIdempotent::from_superoperator(&s, DEFAULT_SEED) {
                Ok(b) => AnyChannel::Block(b),
                Err(_) => AnyChannel::Dense(s),
            },
            b => b,
        }
    }

    pub fn dim(&self) -> usize {
        self.as_channel().input_dim()
    }

    pub fn as_channel(&self) -> &dyn Channel {
        match self {
            AnyChannel::Block(b) => b,
            AnyChannel::Dense(s) => s,
        }
    }

    pub fn as_block(&self) -> Option<&BlockIdempotent> {
        match self {
            AnyChannel::Block(b) => Some(b),
            AnyChannel::Dense(_) => None,
        }
    }

    pub fn superoperator(&self) -> Result<Superoperator> {
        match self {
            AnyChannel::Block(b) => b.superoperator(),
            AnyChannel::Dense(s) => Ok(s.clone()),
        }
    }
}

impl BlockIdempotent {
    /// Structured form of an idempotent channel with full-rank unit image, verified against
    /// the input transfer matrix within 1e-8.
    pub fn from_superoperator(s: &Superoperator, seed: u64) -> Result<BlockIdempotent> {
        let alg = fixed_point_algebra(s)?;
        let ab = algebra_blocks(&alg, seed)?;
        let d = s.dim();
        let u = &ab.unitary;
        let mut blocks = Vec::with_capacity(ab.dims.len());
        for (&(a, b), o) in ab.dims.iter().zip(ab.offsets()) {
            let mut x = ComplexMatrix::zeros(d, d);
            for g in 0..b {
                x[(o + g, o + g)] = crate::matcore::c(1.0 / b as f64, 0.0);
            }
            let y = u.conjugate_adj(&s.apply_matrix(&u.conjugate(&x)));
            let blk = y.submatrix(o, o, a * b, a * b);
            let omega = DensityMatrix::assume(partial_trace(&blk, &[a, b], &[1])?);
            blocks.push(Block::new(a, b, omega)?);
        }
        let out = BlockIdempotent::new(u.clone(), blocks)?;
        let res = out.superoperator()?.transfer().dist(s.transfer());
        if res > 1e-8 {
            return Err(Error::AlgebraStructure(format!("block form does not reproduce the channel: {res:.3e}")));
        }
        Ok(out)
    }
}
