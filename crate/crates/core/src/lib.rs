pub mod automorphy;
pub mod encoding;
pub mod groups;
pub mod maass_ops;
pub mod maslov;
pub mod matrix_core;
pub mod random;
pub mod schrodinger_weil;
pub mod theta;
