//! Semi-discrete optimal transport in the plane: power diagrams, the
//! Kantorovich dual solver and derivatives of `W₂²` to an empirical measure.

mod derivatives;
mod geometry;
mod integrate;
mod planar;
mod solver;

pub use derivatives::{
    dtheta_w2sq, dtheta_w2sq_transport, dweights_dtheta, grad_xi_w2sq, mixed_derivative_xi_theta, mixed_derivatives,
};
pub use geometry::{build_power_diagram, Cell, ConvexPolygon, EdgeLabel, Point, PowerDiagram};
pub use integrate::{cell_integral, cell_integral_vec, cell_nodes, edge_nodes, CELL_REFINEMENT};
pub use planar::{
    build_planar_family, dtheta_density, PlanarFamily, PlaneLocation, TiltFamily, TruncatedGaussianScale, UniformSquare,
};
pub use solver::{solve_dual, solve_dual_density, DensityFn, DualOptions, DualSolveResult};
