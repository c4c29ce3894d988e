//! Parametric synthesis, generative modeling, and multi-objective Bayesian
//! optimization of flow-battery manifold designs.
//!
//! The pipeline, end to end:
//!
//! 1. [`archetypes`] — five parametric manifold families sampled by Latin
//!    hypercube into design tables, instantiated as half-cavity geometries.
//! 2. [`raster`] — halves are mirrored, mixed pairwise, and rasterized into
//!    three-class (solid / fluid / boundary) training corpora.
//! 3. [`infogan`] — an information-regularized GAN over rasters built on the
//!    hand-rolled dense-network substrate in [`nn`]; the auxiliary encoder
//!    gives an invertible-ish map between latent codes and designs.
//! 4. [`tsne`] — exact t-SNE embeddings of encoded corpora for inspection.
//! 5. [`gp`] + [`mobo`] — Gaussian-process emulators over the latent ball and
//!    batched expected-hypervolume-improvement optimization of the two flow
//!    objectives computed by [`flow`].
//! 6. [`interpret`] — Monte-Carlo Pareto-membership probabilities and marginal
//!    histograms over candidate latents.
//!
//! Everything is 64-bit, single-threaded, and deterministic given the seeds
//! carried in the relevant configs.

pub mod archetypes;
pub mod exact;
pub mod flow;
pub mod geom;
pub mod gp;
pub mod infogan;
pub mod interpret;
pub mod mobo;
pub mod nn;
pub mod raster;
pub mod rng;
pub mod sobol;
pub mod svg;
pub mod tsne;
