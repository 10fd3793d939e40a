use crate::error::{check_dims, Error, Result};

/// Dense `C×H×W` grid of real values, stored row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    /// Builds a map from channel-major, row-major data. All values must be finite.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "feature map {channels}x{height}x{width} has an empty axis"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::InvalidDimensions(format!(
                "feature map {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    /// Builds a map by evaluating `f(channel, y, x)` on every cell.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    /// Internal constructor for data produced by already-validated operations.
    pub(crate) fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    /// The `H×W` plane of one channel.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Copies the C-vector stored at pixel `(y, x)` into `out`.
    pub fn pixel_into(&self, y: usize, x: usize, out: &mut [f64]) {
        let n = self.plane_len();
        let offset = y * self.width + x;
        for (c, slot) in out.iter_mut().enumerate().take(self.channels) {
            *slot = self.data[c * n + offset];
        }
    }

    pub fn pixel(&self, y: usize, x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.channels];
        self.pixel_into(y, x, &mut out);
        out
    }

    /// Pixel-major copy: `H·W` consecutive C-vectors. Used by the correlation
    /// kernels so every dot product reads contiguous memory.
    pub fn to_pixel_major(&self) -> Vec<f64> {
        let n = self.plane_len();
        let mut out = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            let plane = &self.data[c * n..(c + 1) * n];
            for (p, &v) in plane.iter().enumerate() {
                out[p * self.channels + c] = v;
            }
        }
        out
    }

    /// `alpha·self + beta·other`, both maps of identical shape.
    pub fn linear_combination(&self, alpha: f64, other: &FeatureMap, beta: f64) -> Result<Self> {
        if self.channels != other.channels {
            return Err(Error::ChannelMismatch {
                left: self.channels,
                right: other.channels,
            });
        }
        check_dims("feature map", self.dims(), other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Self::new(self.channels, self.height, self.width, data)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|v| v * s).collect(),
        )
    }
}

/// Per-pixel displacement `(u, v)` in pixels of this field's own grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "flow field {height}x{width} has an empty axis"
            )));
        }
        let n = height * width;
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidDimensions(format!(
                "flow field {height}x{width} needs {n} values per component, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("flow field"));
        }
        Ok(Self { height, width, u, v })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::constant(height, width, 0.0, 0.0)
    }

    pub fn constant(height: usize, width: usize, u: f64, v: f64) -> Result<Self> {
        let n = height * width;
        Self::new(height, width, vec![u; n], vec![v; n])
    }

    /// Builds a field from `f(y, x) -> (u, v)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Result<Self> {
        let n = height * width;
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(y, x);
                u.push(a);
                v.push(b);
            }
        }
        Self::new(height, width, u, v)
    }

    pub(crate) fn from_parts(height: usize, width: usize, u: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert_eq!(u.len(), height * width);
        debug_assert_eq!(v.len(), height * width);
        Self { height, width, u, v }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn get(&self, y: usize, x: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_parts(
            self.height,
            self.width,
            self.u.iter().map(|x| x * s).collect(),
            self.v.iter().map(|x| x * s).collect(),
        )
    }

    /// Element-wise sum; the result is not re-validated for finiteness.
    pub fn add(&self, other: &FlowField) -> Result<Self> {
        check_dims("flow field", self.dims(), other.dims())?;
        Ok(Self::from_parts(
            self.height,
            self.width,
            self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Per-pixel Euclidean distance to `other`.
    pub fn endpoint_errors(&self, other: &FlowField) -> Result<Vec<f64>> {
        check_dims("flow field", self.dims(), other.dims())?;
        Ok((0..self.len())
            .map(|i| (self.u[i] - other.u[i]).hypot(self.v[i] - other.v[i]))
            .collect())
    }
}

/// `H×W` boolean flags (validity, non-occlusion).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    height: usize,
    width: usize,
    flags: Vec<bool>,
}

impl PixelMask {
    pub fn new(height: usize, width: usize, flags: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || flags.len() != height * width {
            return Err(Error::InvalidDimensions(format!(
                "mask {height}x{width} with {} flags",
                flags.len()
            )));
        }
        Ok(Self { height, width, flags })
    }

    pub fn all(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![true; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut flags = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                flags.push(f(y, x));
            }
        }
        Self::new(height, width, flags)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.flags[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn and(&self, other: &PixelMask) -> Result<Self> {
        check_dims("mask", self.dims(), other.dims())?;
        Ok(Self {
            height: self.height,
            width: self.width,
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn and_not(&self, other: &PixelMask) -> Result<Self> {
        check_dims("mask", self.dims(), other.dims())?;
        Ok(Self {
            height: self.height,
            width: self.width,
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| *a && !*b).collect(),
        })
    }
}

/// Finite `(x, y)` sample positions in pixel units; `(0, 0)` is the centre of
/// the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCoords(Vec<[f64; 2]>);

impl GridCoords {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample coordinates"));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
