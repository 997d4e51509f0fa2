//! pointfield distills sparse 2D point annotations, gathered across
//! multi-view captures of a tabletop scene, into a trainable volumetric
//! relevancy field. The field is optimized with differentiable volume
//! rendering, then queried for task-relevant 3D action points and grasp
//! poses.

pub mod geom;
pub mod img;
pub mod scene;
