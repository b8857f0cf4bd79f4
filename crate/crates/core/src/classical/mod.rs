//! Classical limit: phase-space charts, the Hamiltonian flow, orbit
//! integration, Poincaré sections and Lyapunov estimates.

pub mod flow;
pub mod integrator;
pub mod lyapunov;
pub mod section;
pub mod state;

pub use flow::{eom_rhs, hamiltonian_value, solve_q_on_shell};
pub use integrator::{integrate_orbit, OrbitControls, Tolerances, Trajectory};
pub use lyapunov::{lyapunov_map, lyapunov_max, LyapunovControls, LyapunovEstimate, OrbitClass};
pub use section::{place_seeds, poincare_section, PoincareSection, SectionPoint, SeedPolicy};
pub use state::{CanonicalPoint, ClassicalState};
