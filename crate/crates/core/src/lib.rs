//! `lowtail`: score functionals of homogeneous Poisson point processes —
//! simulation, stabilization, sprinkling couplings, and lower-tail Monte
//! Carlo.
//!
//! The central object is the volume-normalized empirical functional
//!
//! ```text
//! H_n = n^-d * sum over points X_i in the box Q_n of xi(X - X_i)
//! ```
//!
//! where `xi` is a nonnegative score of the configuration recentred at a
//! point: clique counts and power-weighted edge sums in the random geometric
//! graph, power-weighted incident edges in the k-nearest-neighbor and
//! relative neighborhood graphs, and intrinsic volumes of planar Voronoi
//! cells. The crate provides
//!
//! - [`geometry`]: configurations, box windows, Poisson sampling, thinning,
//!   superposition, splittable seeded streams;
//! - [`graphs`]: the proximity structures the scores live on;
//! - [`scores`]: the score functions, truncations, windowed evaluation with
//!   reliability flags, and `H_n`;
//! - [`stabilization`]: cone covers, stabilization radii, and the
//!   stabilization identity check;
//! - [`sprinkling`]: thinning + sprinkle couplings and the dense-point /
//!   regularity events used in the lower-tail arguments;
//! - [`entropy`]: the Poisson-family entropy and Monte Carlo upper bounds on
//!   the lower-tail rate;
//! - [`tails`]: tail probability estimation, rate curves, and conditioned
//!   realizations;
//! - [`lemmas`]: executable checks of the structural lemmas (monotonicity,
//!   exceptional-point bounds, degree/angle bounds, coupling inequalities).
//!
//! Everything stochastic is a pure function of its parameters and an
//! [`geometry::RngStream`]; trial loops parallelize behind the `parallel`
//! feature (on by default) with per-trial substreams, so results are
//! byte-identical across worker counts and across the sequential fallback.

pub mod entropy;
pub mod error;
pub mod geometry;
pub mod graphs;
pub mod grid;
pub mod lemmas;
pub mod parallel;
pub mod scores;
pub mod sprinkling;
pub mod stabilization;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};
