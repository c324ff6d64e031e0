//! Reference kernels standing in for BLAS/LAPACK entry points.
//!
//! Every kernel reports its flop count and any buffers it acquires to the
//! [`Collector`](crate::trace::Collector) it is handed. Loop orders are fixed so
//! results are bitwise reproducible.

mod blas;
mod lapack;

use std::fmt;

pub use blas::{
    diag_materialise, diag_of_product, diag_scale, fused_axpby_n, gemm, gemv, syrk, trace,
    trace_of_product, transpose_copy, triple_diag_dot, Side,
};
pub use lapack::{
    band_solve, band_solve_flops, explicit_inverse, lu_factor, lu_solve, triangular_solve,
    LuFactors,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelId {
    FusedAxpbyN,
    Gemm,
    Gemv,
    Syrk,
    DiagScale,
    DiagOfProduct,
    TraceOfProduct,
    TripleDiagDot,
    LuFactor,
    LuSolve,
    BandSolve,
    TriangularSolve,
    ExplicitInverse,
    TransposeCopy,
    DiagMaterialise,
    Trace,
}

impl KernelId {
    pub fn name(self) -> &'static str {
        match self {
            KernelId::FusedAxpbyN => "fused_axpby_n",
            KernelId::Gemm => "gemm",
            KernelId::Gemv => "gemv",
            KernelId::Syrk => "syrk",
            KernelId::DiagScale => "diag_scale",
            KernelId::DiagOfProduct => "diag_of_product",
            KernelId::TraceOfProduct => "trace_of_product",
            KernelId::TripleDiagDot => "triple_diag_dot",
            KernelId::LuFactor => "lu_factor",
            KernelId::LuSolve => "lu_solve",
            KernelId::BandSolve => "band_solve",
            KernelId::TriangularSolve => "triangular_solve",
            KernelId::ExplicitInverse => "explicit_inverse",
            KernelId::TransposeCopy => "transpose_copy",
            KernelId::DiagMaterialise => "diag_materialise",
            KernelId::Trace => "trace",
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn dims(v: &crate::matrix::MatrixView<'_>) -> String {
    format!("{}x{}", v.n_rows(), v.n_cols())
}
