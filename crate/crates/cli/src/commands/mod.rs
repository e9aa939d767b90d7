pub mod analytic;
pub mod ed;
pub mod fit;
pub mod husimi;
pub mod sweep;
