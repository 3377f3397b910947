//! Matrix-free linear maps and the image container they act on.
//!
//! Maps are defined by `apply`/`adjoint` pairs instead of stored matrices so the
//! image-scale transforms (finite differences, Haar pyramids, stacks of both)
//! stay O(pixels) per application. [`materialize`] builds the dense matrix of a
//! small map so tests can compare `adjoint` against an explicit transpose.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use crate::{error::Error, DenseMatrix, DenseVector};

/// Linear map between dense vector spaces.
///
/// Implementations must satisfy the adjoint identity
/// `<apply(x), y> = <x, adjoint(y)>` for all `x`, `y`.
/// `apply`/`adjoint` panic on dimension mismatch; constructors validate shapes.
pub trait LinearMap: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &DenseVector) -> DenseVector;
    fn adjoint(&self, y: &DenseVector) -> DenseVector;

    /// Diagonal entries when the map is square and diagonal, else `None`.
    ///
    /// Lets Landweber construction take the operator norm exactly instead of
    /// estimating it by power iteration.
    fn diagonal(&self) -> Option<DenseVector> {
        None
    }
}

/// The identity on `R^dim`.
pub struct IdentityMap {
    dim: usize,
}

impl IdentityMap {
    pub fn new(dim: usize) -> Self {
        IdentityMap { dim }
    }
}

impl LinearMap for IdentityMap {
    fn in_dim(&self) -> usize {
        self.dim
    }

    fn out_dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(x.len(), self.dim, "IdentityMap::apply: dimension mismatch");
        x.clone()
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        assert_eq!(
            y.len(),
            self.dim,
            "IdentityMap::adjoint: dimension mismatch"
        );
        y.clone()
    }

    fn diagonal(&self) -> Option<DenseVector> {
        Some(DenseVector::from_element(self.dim, 1.0))
    }
}

/// Multiplication by a diagonal matrix.
pub struct DiagonalMap {
    entries: DenseVector,
}

impl DiagonalMap {
    pub fn new(entries: DenseVector) -> Self {
        DiagonalMap { entries }
    }
}

impl LinearMap for DiagonalMap {
    fn in_dim(&self) -> usize {
        self.entries.len()
    }

    fn out_dim(&self) -> usize {
        self.entries.len()
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(
            x.len(),
            self.entries.len(),
            "DiagonalMap::apply: dimension mismatch"
        );
        x.component_mul(&self.entries)
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        self.apply(y)
    }

    fn diagonal(&self) -> Option<DenseVector> {
        Some(self.entries.clone())
    }
}

/// Vertical forward difference on an `height x width` grid, row-major:
/// `out[i][j] = x[i+1][j] - x[i][j]` for `i < height-1`, last row zero.
pub struct RowDiff {
    height: usize,
    width: usize,
}

/// Builds the vertical forward-difference map for an `height x width` grid.
pub fn row_diff(height: usize, width: usize) -> Result<RowDiff, Error> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(
            "row_diff: height and width must be positive",
        ));
    }
    Ok(RowDiff { height, width })
}

impl LinearMap for RowDiff {
    fn in_dim(&self) -> usize {
        self.height * self.width
    }

    fn out_dim(&self) -> usize {
        self.height * self.width
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        let (h, w) = (self.height, self.width);
        assert_eq!(x.len(), h * w, "RowDiff::apply: dimension mismatch");
        let mut out = DenseVector::zeros(h * w);
        for i in 0..h.saturating_sub(1) {
            for j in 0..w {
                out[i * w + j] = x[(i + 1) * w + j] - x[i * w + j];
            }
        }
        out
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        let (h, w) = (self.height, self.width);
        assert_eq!(y.len(), h * w, "RowDiff::adjoint: dimension mismatch");
        let mut out = DenseVector::zeros(h * w);
        for i in 0..h {
            for j in 0..w {
                let mut v = 0.0;
                if i >= 1 {
                    v += y[(i - 1) * w + j];
                }
                if i + 1 < h {
                    v -= y[i * w + j];
                }
                out[i * w + j] = v;
            }
        }
        out
    }
}

/// Horizontal forward difference on an `height x width` grid, row-major:
/// `out[i][j] = x[i][j+1] - x[i][j]` for `j < width-1`, last column zero.
pub struct ColDiff {
    height: usize,
    width: usize,
}

/// Builds the horizontal forward-difference map for an `height x width` grid.
pub fn col_diff(height: usize, width: usize) -> Result<ColDiff, Error> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(
            "col_diff: height and width must be positive",
        ));
    }
    Ok(ColDiff { height, width })
}

impl LinearMap for ColDiff {
    fn in_dim(&self) -> usize {
        self.height * self.width
    }

    fn out_dim(&self) -> usize {
        self.height * self.width
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        let (h, w) = (self.height, self.width);
        assert_eq!(x.len(), h * w, "ColDiff::apply: dimension mismatch");
        let mut out = DenseVector::zeros(h * w);
        for i in 0..h {
            for j in 0..w.saturating_sub(1) {
                out[i * w + j] = x[i * w + j + 1] - x[i * w + j];
            }
        }
        out
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        let (h, w) = (self.height, self.width);
        assert_eq!(y.len(), h * w, "ColDiff::adjoint: dimension mismatch");
        let mut out = DenseVector::zeros(h * w);
        for i in 0..h {
            for j in 0..w {
                let mut v = 0.0;
                if j >= 1 {
                    v += y[i * w + j - 1];
                }
                if j + 1 < w {
                    v -= y[i * w + j];
                }
                out[i * w + j] = v;
            }
        }
        out
    }
}

/// One analysis step of the orthonormal Haar transform on `s` (even length):
/// pairwise sums into the first half, pairwise differences into the second,
/// both scaled by 1/sqrt(2).
fn haar_fwd(s: &mut [f64], buf: &mut [f64]) {
    let m = s.len();
    let h = m / 2;
    for i in 0..h {
        buf[i] = (s[2 * i] + s[2 * i + 1]) * FRAC_1_SQRT_2;
        buf[h + i] = (s[2 * i] - s[2 * i + 1]) * FRAC_1_SQRT_2;
    }
    s.copy_from_slice(&buf[..m]);
}

/// Inverse (= transpose) of [`haar_fwd`].
fn haar_inv(s: &mut [f64], buf: &mut [f64]) {
    let m = s.len();
    let h = m / 2;
    for i in 0..h {
        buf[2 * i] = (s[i] + s[h + i]) * FRAC_1_SQRT_2;
        buf[2 * i + 1] = (s[i] - s[h + i]) * FRAC_1_SQRT_2;
    }
    s.copy_from_slice(&buf[..m]);
}

/// Two-sided multi-level Haar pyramid on an `n x n` grid (`n` a power of two):
/// `X -> P X P^T`, where `P` stacks `levels` block-diagonal analysis steps and
/// each step has orthonormal rows `(e_{2i} + e_{2i+1})/sqrt(2)` and
/// `(e_{2i} - e_{2i+1})/sqrt(2)` acting on the low-pass block of the previous
/// level. `P` is orthogonal, so the adjoint inverts the transform exactly.
pub struct Haar2d {
    n: usize,
    levels: usize,
}

/// Builds the two-sided Haar pyramid for an `n x n` image.
///
/// Requires `n = 2^p` with `p >= 1` and `1 <= levels <= p`.
pub fn haar(n: usize, levels: usize) -> Result<Haar2d, Error> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "haar: n must be a power of two >= 2, got {n}"
        )));
    }
    let p = n.trailing_zeros() as usize;
    if levels == 0 || levels > p {
        return Err(Error::invalid(format!(
            "haar: levels must lie in 1..={p} for n = {n}, got {levels}"
        )));
    }
    Ok(Haar2d { n, levels })
}

impl Haar2d {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }
}

impl LinearMap for Haar2d {
    fn in_dim(&self) -> usize {
        self.n * self.n
    }

    fn out_dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        let n = self.n;
        assert_eq!(x.len(), n * n, "Haar2d::apply: dimension mismatch");
        let mut a = x.as_slice().to_vec();
        let mut buf = vec![0.0; n];
        let mut col = vec![0.0; n];
        // Left factor P: level k transforms the first n >> k entries of every column.
        for k in 0..self.levels {
            let m = n >> k;
            for j in 0..n {
                for i in 0..m {
                    col[i] = a[i * n + j];
                }
                haar_fwd(&mut col[..m], &mut buf);
                for i in 0..m {
                    a[i * n + j] = col[i];
                }
            }
        }
        // Right factor P^T acts the same way on rows.
        for k in 0..self.levels {
            let m = n >> k;
            for i in 0..n {
                haar_fwd(&mut a[i * n..i * n + m], &mut buf);
            }
        }
        DenseVector::from_vec(a)
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        let n = self.n;
        assert_eq!(y.len(), n * n, "Haar2d::adjoint: dimension mismatch");
        let mut a = y.as_slice().to_vec();
        let mut buf = vec![0.0; n];
        let mut col = vec![0.0; n];
        for k in (0..self.levels).rev() {
            let m = n >> k;
            for i in 0..n {
                haar_inv(&mut a[i * n..i * n + m], &mut buf);
            }
        }
        for k in (0..self.levels).rev() {
            let m = n >> k;
            for j in 0..n {
                for i in 0..m {
                    col[i] = a[i * n + j];
                }
                haar_inv(&mut col[..m], &mut buf);
                for i in 0..m {
                    a[i * n + j] = col[i];
                }
            }
        }
        DenseVector::from_vec(a)
    }
}

/// The one-sided factor `P` of [`Haar2d`] as a dense `n x n` matrix.
///
/// Exposed so orthogonality (`P P^T = I`) can be checked directly.
pub fn haar_product_matrix(n: usize, levels: usize) -> Result<DenseMatrix, Error> {
    haar(n, levels)?;
    let mut q = DenseMatrix::zeros(n, n);
    let mut buf = vec![0.0; n];
    let mut v = vec![0.0; n];
    for c in 0..n {
        v.iter_mut().for_each(|e| *e = 0.0);
        v[c] = 1.0;
        for k in 0..levels {
            haar_fwd(&mut v[..n >> k], &mut buf);
        }
        for r in 0..n {
            q[(r, c)] = v[r];
        }
    }
    Ok(q)
}

/// Vertical concatenation of maps sharing one input space.
pub struct StackMap {
    parts: Vec<Arc<dyn LinearMap>>,
    in_dim: usize,
    out_dim: usize,
}

/// Stacks `parts` into one map whose output concatenates the member outputs in
/// order. All members must share the same input dimension.
pub fn stack(parts: Vec<Arc<dyn LinearMap>>) -> Result<StackMap, Error> {
    let first = parts
        .first()
        .ok_or_else(|| Error::invalid("stack: at least one map is required"))?;
    let in_dim = first.in_dim();
    let mut out_dim = 0;
    for part in &parts {
        if part.in_dim() != in_dim {
            return Err(Error::Dimension {
                context: "stack: member input dimension",
                expected: in_dim,
                actual: part.in_dim(),
            });
        }
        out_dim += part.out_dim();
    }
    Ok(StackMap {
        parts,
        in_dim,
        out_dim,
    })
}

impl LinearMap for StackMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(x.len(), self.in_dim, "StackMap::apply: dimension mismatch");
        let mut out = DenseVector::zeros(self.out_dim);
        let mut offset = 0;
        for part in &self.parts {
            let piece = part.apply(x);
            out.as_mut_slice()[offset..offset + piece.len()].copy_from_slice(piece.as_slice());
            offset += piece.len();
        }
        out
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        assert_eq!(
            y.len(),
            self.out_dim,
            "StackMap::adjoint: dimension mismatch"
        );
        let mut out = DenseVector::zeros(self.in_dim);
        let mut offset = 0;
        for part in &self.parts {
            let len = part.out_dim();
            let segment = DenseVector::from_column_slice(&y.as_slice()[offset..offset + len]);
            out += part.adjoint(&segment);
            offset += len;
        }
        out
    }
}

/// Largest map [`materialize`] will expand (entries), guarding against
/// accidentally densifying an image-scale transform.
const MATERIALIZE_LIMIT: usize = 1 << 24;

/// Dense matrix of `map`, built by applying it to basis vectors.
///
/// Test helper for small maps; intended for dimensions up to a few dozen.
pub fn materialize(map: &dyn LinearMap) -> Result<DenseMatrix, Error> {
    let (rows, cols) = (map.out_dim(), map.in_dim());
    if rows.saturating_mul(cols) > MATERIALIZE_LIMIT {
        return Err(Error::invalid(format!(
            "materialize: {rows} x {cols} is too large for a dense test matrix"
        )));
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for c in 0..cols {
        let mut e = DenseVector::zeros(cols);
        e[c] = 1.0;
        let col = map.apply(&e);
        for r in 0..rows {
            out[(r, c)] = col[r];
        }
    }
    Ok(out)
}

/// Image with samples in `[0,1]`, stored row-major and interleaved by channel:
/// sample `(i, j, c)` lives at `data[(i*width + j)*channels + c]`.
///
/// Constructors clamp incoming samples to `[0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Result<Self, Error> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid(
                "ImageGrid: height, width and channels must be positive",
            ));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::Dimension {
                context: "ImageGrid: data length",
                expected,
                actual: data.len(),
            });
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ImageGrid {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        ImageGrid {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.width + j) * self.channels + c]
    }

    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        self.data[(i * self.width + j) * self.channels + c] = v.clamp(0.0, 1.0);
    }

    /// Channel `c` as a row-major plane of length `height * width`.
    pub fn channel(&self, c: usize) -> DenseVector {
        assert!(
            c < self.channels,
            "ImageGrid::channel: channel out of range"
        );
        let mut out = DenseVector::zeros(self.pixel_count());
        for p in 0..self.pixel_count() {
            out[p] = self.data[p * self.channels + c];
        }
        out
    }

    /// Reassembles an image from per-channel planes, clamping to `[0,1]`.
    pub fn from_channels(
        height: usize,
        width: usize,
        planes: &[DenseVector],
    ) -> Result<Self, Error> {
        if planes.is_empty() {
            return Err(Error::invalid(
                "ImageGrid::from_channels: no planes supplied",
            ));
        }
        let pixels = height * width;
        for plane in planes {
            if plane.len() != pixels {
                return Err(Error::Dimension {
                    context: "ImageGrid::from_channels: plane length",
                    expected: pixels,
                    actual: plane.len(),
                });
            }
        }
        let channels = planes.len();
        let mut data = vec![0.0; pixels * channels];
        for (c, plane) in planes.iter().enumerate() {
            for p in 0..pixels {
                data[p * channels + c] = plane[p].clamp(0.0, 1.0);
            }
        }
        Ok(ImageGrid {
            height,
            width,
            channels,
            data,
        })
    }
}
