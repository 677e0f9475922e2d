pub mod fstruct;
pub mod mi_compile;
pub mod normalize;
pub mod signature;
pub mod termcode;
pub mod crosscheck;
pub mod random;
