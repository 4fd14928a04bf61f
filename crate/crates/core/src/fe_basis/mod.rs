//! Element kernels: quadrature, Morley and HCT elements.

pub mod hct;
pub mod morley;
pub mod quadrature;
pub mod singular;

pub use hct::{hct_evaluate, HctDofs, HctElement, HctOrder, HctPiecewise, HctValue};
pub use morley::{morley_basis, ElementGeometry, MorleyLocalBasis};
pub use quadrature::{edge_quad, gauss_legendre, integrate_segment, integrate_triangle, polygon_quad, tri_quad, LineRule, PhysicalRule, TriRule};
pub use singular::{singular_quad, DEFAULT_REL_TOL};
