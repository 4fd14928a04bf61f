pub mod solve;
pub mod sparse;

pub use solve::{
    dual_norm, generalized_eig_min, generalized_eig_min_dense, kkt_matrix, solve_kkt, solve_saddle, KktSolution, SaddleSolution, SpdSolver,
    SADDLE_TOLERANCE,
};
pub use sparse::{dot, norm, CsrMatrix, Triplets};
