use super::MultivariateSeries;
use crate::error::{Error, Result};
use crate::lstm::SequenceBatch;

/// Full-length sliding windows over a series. Window `i` covers source rows
/// `[i·step, i·step + window)`; a ragged tail shorter than `window` is dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    pub windows: SequenceBatch,
    pub window: usize,
    pub step: usize,
    pub origin_length: usize,
    pub starts: Vec<usize>,
}

/// Number of complete windows: `⌊(len − window)/step⌋ + 1`.
pub fn window_count(len: usize, window: usize, step: usize) -> usize {
    if len < window || window == 0 || step == 0 {
        0
    } else {
        (len - window) / step + 1
    }
}

pub fn make_windows(series: &MultivariateSeries, window: usize, step: usize) -> Result<WindowSet> {
    if window == 0 || step == 0 {
        return Err(Error::invalid(format!(
            "window ({window}) and step ({step}) must be positive"
        )));
    }
    let len = series.len();
    if len < window {
        return Err(Error::invalid(format!(
            "series of length {len} is shorter than window {window}"
        )));
    }
    let d = series.num_vars();
    let m = window_count(len, window, step);
    let starts: Vec<usize> = (0..m).map(|i| i * step).collect();
    let mut data = Vec::with_capacity(m * window * d);
    for &s in &starts {
        data.extend_from_slice(&series.values()[s * d..(s + window) * d]);
    }
    Ok(WindowSet {
        windows: SequenceBatch::new(m, window, d, data)?,
        window,
        step,
        origin_length: len,
        starts,
    })
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.windows.dim()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        self.windows.sample(i)
    }

    /// Copies the selected windows into a new batch.
    pub fn select(&self, idx: &[usize]) -> SequenceBatch {
        SequenceBatch::stack(self.window, self.dim(), idx.iter().map(|&i| self.get(i)))
            .expect("windows share one shape")
    }
}
