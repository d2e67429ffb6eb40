pub mod adacorr;
pub mod eval_bounds;
pub mod fit_tsybakov;
pub mod inject_noise;
pub mod lrt_correct;
pub mod report;
pub mod synth_gen;
