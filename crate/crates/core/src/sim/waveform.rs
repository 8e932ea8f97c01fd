// SPDX-License-Identifier: Apache-2.0
use serde::Serialize;

/// Sampled transient result. Node voltages are keyed by node name, branch
/// currents by `i(<device>)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waveform {
    pub time: Vec<f64>,
    pub names: Vec<String>,
    /// `data[k]` is the series for `names[k]`.
    pub data: Vec<Vec<f64>>,
}

impl Waveform {
    pub fn new(names: Vec<String>) -> Self {
        let data = vec![Vec::new(); names.len()];
        Self {
            time: Vec::new(),
            names,
            data,
        }
    }

    pub fn push(&mut self, t: f64, values: &[f64]) {
        debug_assert_eq!(values.len(), self.names.len());
        self.time.push(t);
        for (series, v) in self.data.iter_mut().zip(values) {
            series.push(*v);
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.index(name).map(|k| self.data[k].as_slice())
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.time.last().copied().unwrap_or(0.0)
    }

    /// Linear interpolation of `name` at `t`, clamped to the sampled span.
    pub fn value_at(&self, name: &str, t: f64) -> Option<f64> {
        let s = self.signal(name)?;
        if self.time.is_empty() {
            return None;
        }
        let k = self.time.partition_point(|&x| x < t);
        Some(if k == 0 {
            s[0]
        } else if k >= self.time.len() {
            s[s.len() - 1]
        } else {
            let (t0, t1) = (self.time[k - 1], self.time[k]);
            let w = (t - t0) / (t1 - t0);
            s[k - 1] + w * (s[k] - s[k - 1])
        })
    }

    /// Checks the structural invariants: equal lengths, finite samples,
    /// strictly increasing time starting at zero.
    pub fn is_well_formed(&self) -> bool {
        self.time.first() == Some(&0.0)
            && self.time.windows(2).all(|w| w[1] > w[0])
            && self
                .data
                .iter()
                .all(|s| s.len() == self.time.len() && s.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let mut w = Waveform::new(vec!["a".into()]);
        w.push(0.0, &[0.0]);
        w.push(1.0, &[2.0]);
        w.push(2.0, &[2.0]);
        assert_eq!(w.value_at("a", 0.5), Some(1.0));
        assert_eq!(w.value_at("a", -1.0), Some(0.0));
        assert_eq!(w.value_at("a", 5.0), Some(2.0));
        assert_eq!(w.value_at("b", 0.5), None);
        assert!(w.is_well_formed());
    }
}
