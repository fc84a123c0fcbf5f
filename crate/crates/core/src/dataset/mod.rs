//! Series ingestion and the transforms applied before windowing:
//! min–max scaling, optional PCA projection, sliding windows.

mod normalize;
mod pca;
mod series;
mod window;

pub use normalize::NormalizationState;
pub use pca::{components_for_variance, fit_pca, PcaState};
pub use series::{load_csv, read_csv, write_csv, MultivariateSeries};
pub use window::{make_windows, window_count, WindowSet};

use crate::error::Result;

/// How many principal components to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PcSelection {
    Off,
    Count(usize),
    /// Smallest count reaching this cumulative explained-variance ratio.
    Variance(f64),
}

/// PCA on the scaled data, followed by a second min–max scaling of the
/// projected coordinates so they share the generator's `(−1, 1)` range.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub pca: PcaState,
    pub rescale: NormalizationState,
}

/// Transforms fitted on training data and replayed on test data.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessor {
    pub normalization: NormalizationState,
    pub projection: Option<Projection>,
}

impl Preprocessor {
    pub fn fit(train: &MultivariateSeries, pcs: PcSelection) -> Result<Self> {
        let normalization = NormalizationState::fit(train)?;
        let scaled = normalization.normalize(train)?;
        let k = match pcs {
            PcSelection::Off => None,
            PcSelection::Count(k) => Some(k),
            PcSelection::Variance(target) => Some(components_for_variance(
                &PcaState::spectrum(&scaled)?,
                target,
            )),
        };
        let projection = match k {
            None => None,
            Some(k) => {
                let pca = fit_pca(&scaled, k)?;
                let rescale = NormalizationState::fit(&pca.project(&scaled)?)?;
                Some(Projection { pca, rescale })
            }
        };
        Ok(Preprocessor {
            normalization,
            projection,
        })
    }

    pub fn input_vars(&self) -> usize {
        self.normalization.num_vars()
    }

    /// Dimension of the transformed data.
    pub fn output_dim(&self) -> usize {
        self.projection
            .as_ref()
            .map_or(self.input_vars(), |p| p.pca.num_components())
    }

    pub fn apply(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        let scaled = self.normalization.normalize(series)?;
        match &self.projection {
            None => Ok(scaled),
            Some(p) => p.rescale.normalize(&p.pca.project(&scaled)?),
        }
    }
}
