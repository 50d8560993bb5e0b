//! Sums of two squares in the ring of integers of a real quadratic field.
//!
//! The crate counts representations `r(λ) = #{(ξ, η) ∈ O² : λ = ξ² + η²}`,
//! evaluates the correlation sums `N_D(V₁, V₂) = Σ r(λ) r(λ+1)` over boxes
//! `0 ≤ λ < V₁, 0 ≤ λ^σ < V₂`, and checks the arithmetic of the subgroup
//! `Γ ⊂ PSL₂(O)` whose covolume determines the constant `C_D` in
//! `N_D(V₁, V₂) ~ C_D V₁ V₂`.

pub mod character;
pub mod corrsum;
pub mod error;
pub mod hilbertgroup;
pub mod quadfield;
pub mod repcount;

pub use character::{c_constant, covolume, index_gamma, kronecker, ExactRational, VolumeReport};
pub use error::{Error, Result};
pub use quadfield::{FieldData, QuadInt, RingClass};
