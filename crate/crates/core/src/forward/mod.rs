//! Forward simulation with the complete electrode model and the discrete
//! ND/DN maps built from electrode data.

pub mod dnmap;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod patterns;

pub use dnmap::{best_fit_scale, dn_from_nd, homogeneous_dn, nd_from_data, DnMap, ForwardConfig};
pub use fem::{add_noise, fem_solve_cem, simulate_voltages, CemSolution, CemSolver, FemProblem, VoltageFrame};
pub use mesh::{DiscMesh, MeshConfig};
pub use patterns::{adjacent_patterns, orthonormalize_patterns, CurrentPatternBasis};
