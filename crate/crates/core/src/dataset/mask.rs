use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::GestureDataset;
use crate::error::{Error, Result};
use glovenet_tensor::Tensor;

/// Non-empty set of sensor indices into a dataset's `sensor_layout`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SensorMask {
    selected: BTreeSet<usize>,
}

impl SensorMask {
    pub fn new(selected: impl IntoIterator<Item = usize>) -> Result<Self> {
        let selected: BTreeSet<usize> = selected.into_iter().collect();
        if selected.is_empty() {
            return Err(Error::Usage("sensor mask must select at least one sensor".into()));
        }
        Ok(SensorMask { selected })
    }

    pub fn all(n_sensors: usize) -> Result<Self> {
        Self::new(0..n_sensors)
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Sensor names joined with `+`, e.g. `index+ring`.
    pub fn label(&self, ds: &GestureDataset) -> String {
        self.selected()
            .map(|i| {
                ds.sensor_layout
                    .get(i)
                    .map_or_else(|| i.to_string(), |s| s.name.clone())
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Keeps only the channels of the selected sensors, in layout order.
pub fn apply_sensor_mask(ds: &GestureDataset, mask: &SensorMask) -> Result<GestureDataset> {
    let n_sensors = ds.sensor_layout.len();
    if let Some(bad) = mask.selected().find(|&i| i >= n_sensors) {
        return Err(Error::Usage(format!(
            "sensor index {bad} out of range for {n_sensors} sensors"
        )));
    }
    let mut keep = Vec::new();
    let mut start = 0;
    for (i, s) in ds.sensor_layout.iter().enumerate() {
        if mask.selected.contains(&i) {
            keep.extend(start..start + s.channels);
        }
        start += s.channels;
    }
    let (n, t, s) = (ds.n_samples(), ds.window_length(), ds.n_channels());
    let mut data = Vec::with_capacity(n * t * keep.len());
    for row in ds.samples.data().chunks(s) {
        data.extend(keep.iter().map(|&c| row[c]));
    }
    let mut out = ds.clone();
    out.samples = Tensor::new(vec![n, t, keep.len()], data)?;
    out.sensor_layout = mask.selected().map(|i| ds.sensor_layout[i].clone()).collect();
    Ok(out)
}
