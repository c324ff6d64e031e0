//! Column-major dense storage, strided views and run-time structure analysis.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a storage buffer. Copies receive a fresh id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatrixId(pub u64);

impl MatrixId {
    fn next() -> Self {
        MatrixId(NEXT_ID.fetch_add(1, Ordering::Relaxed))
    }
}

impl fmt::Display for MatrixId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How to populate a freshly created matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Fill {
    Zeros,
    Identity,
    /// I.i.d. draws from `[0, 1)`, reproducible from the seed.
    Uniform(u64),
    /// Column-major element sequence.
    Values(Vec<f64>),
}

/// Dense matrix of `f64` in column-major order.
///
/// Element `(i, j)` lives at `data[i + j * n_rows]`.
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    id: MatrixId,
}

impl DenseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, fill: Fill) -> Result<Self> {
        let len = n_rows * n_cols;
        let data = match fill {
            Fill::Zeros => vec![0.0; len],
            Fill::Identity => {
                if n_rows != n_cols {
                    return Err(Error::Dimension(format!(
                        "identity fill requires a square shape, got {n_rows}x{n_cols}"
                    )));
                }
                let mut data = vec![0.0; len];
                for i in 0..n_rows {
                    data[i + i * n_rows] = 1.0;
                }
                data
            }
            Fill::Uniform(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..len).map(|_| rng.random::<f64>()).collect()
            }
            Fill::Values(values) => {
                if values.len() != len {
                    return Err(Error::Length {
                        expected: len,
                        actual: values.len(),
                    });
                }
                values
            }
        };
        Ok(Self::from_parts(n_rows, n_cols, data))
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_parts(n_rows, n_cols, vec![0.0; n_rows * n_cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, Fill::Identity).expect("square identity")
    }

    pub fn random(n_rows: usize, n_cols: usize, seed: u64) -> Self {
        Self::new(n_rows, n_cols, Fill::Uniform(seed)).expect("uniform fill")
    }

    pub fn from_col_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(n_rows, n_cols, Fill::Values(values))
    }

    /// Build from row-major nested rows; convenient for small literals in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::Length {
                expected: n_cols,
                actual: bad.len(),
            });
        }
        let mut m = Self::zeros(n_rows, n_cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub(crate) fn from_parts(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_rows * n_cols);
        DenseMatrix {
            n_rows,
            n_cols,
            data,
            id: MatrixId::next(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn id(&self) -> MatrixId {
        self.id
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.data[i + j * self.n_rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.data[i + j * self.n_rows] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Column-major copy of the elements.
    pub fn to_values(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.n_rows;
        &mut self.data[j * n..(j + 1) * n]
    }

    /// Read-only view of the whole matrix.
    pub fn view(&self) -> MatrixView<'_> {
        MatrixView {
            base: self,
            row_offset: 0,
            col_offset: 0,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            transposed: false,
        }
    }

    pub fn col_view(&self, j: usize) -> Result<MatrixView<'_>> {
        self.view().col_view(j)
    }

    pub fn row_view(&self, i: usize) -> Result<MatrixView<'_>> {
        self.view().row_view(i)
    }

    pub fn structure(&self) -> StructureInfo {
        analyze_structure(&self.view())
    }

    /// Rows top-to-bottom, 17 significant digits per element.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_rows {
            let row: Vec<String> = (0..self.n_cols)
                .map(|j| format!("{:.16e}", self.get(i, j)))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| (0..self.n_cols).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Clone for DenseMatrix {
    fn clone(&self) -> Self {
        Self::from_parts(self.n_rows, self.n_cols, self.data.clone())
    }
}

/// Value equality; ids are ignored.
impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols && self.data == other.data
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix#{} {}x{}", self.id, self.n_rows, self.n_cols)?;
        f.write_str(&self.to_debug_text())
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_debug_text())
    }
}

/// Rectangular window into a [`DenseMatrix`], optionally transposed. Never copies.
///
/// Offsets and extents are in base coordinates; [`MatrixView::n_rows`] and
/// [`MatrixView::n_cols`] report the shape as seen through the view.
#[derive(Clone, Copy)]
pub struct MatrixView<'a> {
    base: &'a DenseMatrix,
    row_offset: usize,
    col_offset: usize,
    n_rows: usize,
    n_cols: usize,
    transposed: bool,
}

impl<'a> MatrixView<'a> {
    pub(crate) fn from_window(base: &'a DenseMatrix, w: &Window) -> Self {
        debug_assert!(w.row_offset + w.n_rows <= base.n_rows);
        debug_assert!(w.col_offset + w.n_cols <= base.n_cols);
        MatrixView {
            base,
            row_offset: w.row_offset,
            col_offset: w.col_offset,
            n_rows: w.n_rows,
            n_cols: w.n_cols,
            transposed: w.transposed,
        }
    }

    pub fn base(&self) -> &'a DenseMatrix {
        self.base
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    pub fn n_rows(&self) -> usize {
        if self.transposed {
            self.n_cols
        } else {
            self.n_rows
        }
    }

    pub fn n_cols(&self) -> usize {
        if self.transposed {
            self.n_rows
        } else {
            self.n_cols
        }
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_vector(&self) -> bool {
        self.n_rows == 1 || self.n_cols == 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if self.transposed { (j, i) } else { (i, j) };
        debug_assert!(r < self.n_rows && c < self.n_cols);
        self.base.get(self.row_offset + r, self.col_offset + c)
    }

    /// Element `k` in column-major order of the view's own shape.
    #[inline]
    pub fn get_linear(&self, k: usize) -> f64 {
        let rows = self.n_rows();
        self.get(k % rows, k / rows)
    }

    /// Diagonal entry `i` when the view is square, otherwise element `i` of a vector.
    #[inline]
    pub(crate) fn diag_entry(&self, i: usize) -> f64 {
        if self.n_rows == self.n_cols {
            self.get(i, i)
        } else {
            self.get_linear(i)
        }
    }

    /// Length of the diagonal carried by a square matrix or a vector.
    pub(crate) fn diag_len(&self) -> usize {
        if self.n_rows == self.n_cols {
            self.n_rows
        } else {
            self.len()
        }
    }

    pub fn t(mut self) -> Self {
        self.transposed = !self.transposed;
        self
    }

    pub fn col_view(&self, j: usize) -> Result<MatrixView<'a>> {
        let w = self.window().col(j)?;
        Ok(Self::from_window(self.base, &w))
    }

    pub fn row_view(&self, i: usize) -> Result<MatrixView<'a>> {
        let w = self.window().row(i)?;
        Ok(Self::from_window(self.base, &w))
    }

    pub(crate) fn window(&self) -> Window {
        Window {
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            transposed: self.transposed,
        }
    }

    /// Column `j` (as seen) as a contiguous slice, when the layout allows it.
    #[inline]
    pub(crate) fn col_slice(&self, j: usize) -> Option<&'a [f64]> {
        let ld = self.base.n_rows;
        if !self.transposed {
            let start = self.row_offset + (self.col_offset + j) * ld;
            return Some(&self.base.data[start..start + self.n_rows]);
        }
        // seen column j is base row `row_offset + j`, strided by ld
        (ld == 1 || self.n_cols == 1).then(|| {
            let start = self.row_offset + j + self.col_offset * ld;
            &self.base.data[start..start + self.n_cols]
        })
    }

    /// The whole view as one contiguous column-major slice, when possible.
    #[inline]
    pub(crate) fn contiguous(&self) -> Option<&'a [f64]> {
        let ld = self.base.n_rows;
        let start = self.row_offset + self.col_offset * ld;
        let ok = if self.transposed {
            // a transposed base column reads linearly; so does a row of a 1-row base
            self.n_cols == 1 || (self.n_rows == 1 && ld == 1)
        } else {
            (self.row_offset == 0 && self.n_rows == ld) || self.n_cols == 1
        };
        ok.then(|| &self.base.data[start..start + self.len()])
    }

    /// Copy into a fresh matrix of the view's shape.
    pub fn to_matrix(&self) -> DenseMatrix {
        let (r, c) = (self.n_rows(), self.n_cols());
        let mut out = DenseMatrix::zeros(r, c);
        for j in 0..c {
            for i in 0..r {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }
}

impl fmt::Debug for MatrixView<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixView")
            .field("base", &self.base.id)
            .field("row_offset", &self.row_offset)
            .field("col_offset", &self.col_offset)
            .field("n_rows", &self.n_rows)
            .field("n_cols", &self.n_cols)
            .field("transposed", &self.transposed)
            .finish()
    }
}

/// The geometry of a view without the borrow; plans store these and bind them at execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub row_offset: usize,
    pub col_offset: usize,
    /// Extent in base coordinates.
    pub n_rows: usize,
    pub n_cols: usize,
    pub transposed: bool,
}

impl Window {
    pub fn full(n_rows: usize, n_cols: usize) -> Self {
        Window {
            row_offset: 0,
            col_offset: 0,
            n_rows,
            n_cols,
            transposed: false,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        if self.transposed {
            (self.n_cols, self.n_rows)
        } else {
            (self.n_rows, self.n_cols)
        }
    }

    pub fn t(mut self) -> Self {
        self.transposed = !self.transposed;
        self
    }

    pub fn is_full(&self, base_rows: usize, base_cols: usize) -> bool {
        self.row_offset == 0
            && self.col_offset == 0
            && self.n_rows == base_rows
            && self.n_cols == base_cols
            && !self.transposed
    }

    /// Column `j` of the window as seen (after transposition).
    pub fn col(&self, j: usize) -> Result<Window> {
        let (_, cols) = self.shape();
        if j >= cols {
            return Err(Error::Index {
                index: j,
                extent: cols,
            });
        }
        Ok(if self.transposed {
            // column j of a transposed window is base row j, read transposed
            Window {
                row_offset: self.row_offset + j,
                col_offset: self.col_offset,
                n_rows: 1,
                n_cols: self.n_cols,
                transposed: true,
            }
        } else {
            Window {
                row_offset: self.row_offset,
                col_offset: self.col_offset + j,
                n_rows: self.n_rows,
                n_cols: 1,
                transposed: false,
            }
        })
    }

    /// Row `i` of the window as seen (after transposition).
    pub fn row(&self, i: usize) -> Result<Window> {
        let (rows, _) = self.shape();
        if i >= rows {
            return Err(Error::Index {
                index: i,
                extent: rows,
            });
        }
        Ok(if self.transposed {
            Window {
                row_offset: self.row_offset,
                col_offset: self.col_offset + i,
                n_rows: self.n_rows,
                n_cols: 1,
                transposed: true,
            }
        } else {
            Window {
                row_offset: self.row_offset + i,
                col_offset: self.col_offset,
                n_rows: 1,
                n_cols: self.n_cols,
                transposed: false,
            }
        })
    }
}

/// Run-time detected matrix properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureInfo {
    pub is_square: bool,
    pub lower_bandwidth: usize,
    pub upper_bandwidth: usize,
    pub is_upper_triangular: bool,
    pub is_lower_triangular: bool,
    pub is_symmetric: bool,
}

/// Single pass over the elements. Zero tests and symmetry use exact comparisons.
pub fn analyze_structure(m: &MatrixView<'_>) -> StructureInfo {
    let (rows, cols) = (m.n_rows(), m.n_cols());
    let is_square = rows == cols;
    let mut lower = 0usize;
    let mut upper = 0usize;
    let mut symmetric = is_square;
    for j in 0..cols {
        for i in 0..rows {
            let v = m.get(i, j);
            if v != 0.0 {
                if i > j {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
            if symmetric && i > j && v != m.get(j, i) {
                symmetric = false;
            }
        }
    }
    StructureInfo {
        is_square,
        lower_bandwidth: lower,
        upper_bandwidth: upper,
        is_upper_triangular: is_square && lower == 0,
        is_lower_triangular: is_square && upper == 0,
        is_symmetric: symmetric,
    }
}
