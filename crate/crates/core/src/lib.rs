pub mod assign;
pub mod baselines;
pub mod cli;
pub mod datagen;
pub mod divers;
pub mod flow;
pub mod metrics;
pub mod model;
pub mod network;
pub mod rng;
pub mod textsim;
