//! Uniform 1-D and 2-D grids and the real-valued fields tabulated on them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisTag {
    QuadratureX,
    QuadratureP,
    PhaseSpaceRe,
    PhaseSpaceIm,
    CoherentBasisA,
    CoherentBasisB,
}

impl AxisTag {
    pub fn column_name(self) -> &'static str {
        match self {
            AxisTag::QuadratureX => "x",
            AxisTag::QuadratureP => "p",
            AxisTag::PhaseSpaceRe => "re_alpha",
            AxisTag::PhaseSpaceIm => "im_alpha",
            AxisTag::CoherentBasisA => "a",
            AxisTag::CoherentBasisB => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub tag: AxisTag,
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    /// Grid `min, min + step, ..., max`; `max - min` is rounded to a whole
    /// number of steps.
    pub fn new(tag: AxisTag, min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        if !min.is_finite() || !max.is_finite() || max < min {
            return Err(invalid("axis", format!("bad range [{min}, {max}]")));
        }
        let len = ((max - min) / step).round() as usize + 1;
        Ok(Self { tag, min, step, len })
    }

    /// Grid symmetric about zero covering `[-extent, extent]`.
    pub fn symmetric(tag: AxisTag, extent: f64, step: f64) -> Result<Self> {
        let n = (extent / step).ceil();
        Self::new(tag, -n * step, n * step, step)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn max(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Composite trapezoid weights including the step.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.len, self.step)
    }

    /// Index of the grid point nearest to `v`, clamped to the grid.
    pub fn nearest(&self, v: f64) -> usize {
        let i = ((v - self.min) / self.step).round();
        i.clamp(0.0, (self.len - 1) as f64) as usize
    }
}

pub fn trapezoid_weights(len: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; len];
    if len == 1 {
        w[0] = 0.0;
    } else if len > 1 {
        w[0] *= 0.5;
        w[len - 1] *= 0.5;
    }
    w
}

/// A real field on a 1-D or 2-D uniform grid. 2-D values are row-major with
/// the first axis slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(invalid("axes", "a field has one or two axes"));
        }
        let expected: usize = axes.iter().map(|a| a.len).product();
        if values.len() != expected {
            return Err(invalid(
                "values",
                format!("expected {expected} values, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid field"));
        }
        Ok(Self { axes, values })
    }

    pub fn tabulate_1d(axis: Axis, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = axis.points().into_iter().map(f).collect();
        Self::new(vec![axis], values)
    }

    pub fn tabulate_2d(x: Axis, y: Axis, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let ys = y.points();
        let mut values = Vec::with_capacity(x.len * y.len);
        for i in 0..x.len {
            let xv = x.point(i);
            values.extend(ys.iter().map(|&yv| f(xv, yv)));
        }
        Self::new(vec![x, y], values)
    }

    pub fn is_2d(&self) -> bool {
        self.axes.len() == 2
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axes[1].len + j]
    }

    /// Trapezoid-rule integral over the whole grid.
    pub fn integral(&self) -> f64 {
        self.weighted_sum(|v| v)
    }

    /// Trapezoid-rule integral of `f(value)`.
    pub fn weighted_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        let wx = self.axes[0].trapezoid_weights();
        if !self.is_2d() {
            return self.values.iter().zip(&wx).map(|(&v, &w)| w * f(v)).sum();
        }
        let wy = self.axes[1].trapezoid_weights();
        let ny = wy.len();
        let mut total = 0.0;
        for (i, &a) in wx.iter().enumerate() {
            let row = &self.values[i * ny..(i + 1) * ny];
            let s: f64 = row.iter().zip(&wy).map(|(&v, &w)| w * f(v)).sum();
            total += a * s;
        }
        total
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid indices of the largest value.
    pub fn argmax(&self) -> Vec<usize> {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            });
        if self.is_2d() {
            let ny = self.axes[1].len;
            vec![k / ny, k % ny]
        } else {
            vec![k]
        }
    }

    /// CSV with one column per axis and a `value` column. The manifest hash, if
    /// given, goes into a leading `#` comment line.
    pub fn to_csv(&self, manifest_hash: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(h) = manifest_hash {
            let _ = writeln!(out, "# manifest_hash: {h}");
        }
        let header: Vec<&str> = self.axes.iter().map(|a| a.tag.column_name()).collect();
        let _ = writeln!(out, "{},value", header.join(","));
        if self.is_2d() {
            let (x, y) = (self.axes[0], self.axes[1]);
            for i in 0..x.len {
                for j in 0..y.len {
                    let _ = writeln!(
                        out,
                        "{:.6},{:.6},{:.12e}",
                        x.point(i),
                        y.point(j),
                        self.get2(i, j)
                    );
                }
            }
        } else {
            let x = self.axes[0];
            for i in 0..x.len {
                let _ = writeln!(out, "{:.6},{:.12e}", x.point(i), self.values[i]);
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("grid field serializes")
    }
}
