pub mod cli;
pub mod coupled;
pub mod estimator;
pub mod fe;
pub mod gpe;
pub mod linalg;
pub mod mesh;
