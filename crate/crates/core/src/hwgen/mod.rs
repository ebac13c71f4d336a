//! Hardware back end: structural netlists and PPA forecasting.

pub mod netlist;
pub mod ppa;

pub use netlist::{emit_netlist, emit_netlist_string, parse_netlist, NetlistStats, ParsedNetlist};
pub use ppa::{compare_pdks, fit_ppa, reference_model, FitMethod, Forecast, LinearFit, Pdk, PpaModel, PpaTable};
