//! Interpretation tools: token CAM with highlighting, PCA projections and token-token
//! correlation matrices.

pub mod cam;
pub mod correlation;
pub mod pca;

pub use cam::{cam, highlight, highlight_count, render, AnnotatedToken, CamReport, CamScores, RenderFormat};
pub use correlation::{correlation_matrix, CorrelationMatrix};
pub use pca::{pca_fit, pca_project, projections_csv, top_eigenpairs, PcaModel};
