//! The two-agent order-book market model.

mod dump;
mod params;
mod sim;
mod taker;

pub use dump::{
    parse_trade_signs, write_book_snapshot, write_simulation_dump, write_trade_signs, BOOK_HEADER, SIGN_HEADER,
    SIMULATION_HEADER,
};
pub use params::{ActivationMode, InitReference, ModelParams, RunConfig};
pub use sim::{
    initialize_book, place_provider_orders, place_taker_orders, run_mc_step, simulate, BookObserver, PlacementReport,
    Reference, Simulation, SimulationOutput, StepOutcome, StepRecord,
};
pub use taker::{draw_eta, estimate_q_variance, eta_from_uniform, placement_depth, step_q_taker, TakerState};
