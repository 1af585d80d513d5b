//! Grid geometry, field storage, difference operators, discrete norms,
//! initial-data projection and field dumps.

mod dump;
mod grid;
mod norms;
mod ops;
mod project;
mod storage;

pub use dump::{read_dump, write_dump, DumpHeader};
pub use grid::GridSpec;
pub use norms::{
    div_norm_sq_h, grad_inner_h, grad_norm_h, inner_h, norm_h, reduction_mode, set_reduction_mode,
    ReductionMode,
};
pub use ops::{alpha_h, diff, div_h, laplacian_h, Difference};
pub use project::{cell_average, project_initial};
pub use storage::{
    FieldKind, GridField, QTensorField, ScalarField, ScalarKind, TensorKind, VectorField, VectorKind,
};

pub(crate) use norms::dot_h;
pub(crate) use ops::par_nodes_mut;
