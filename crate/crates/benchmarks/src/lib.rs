//! Desk-scale DAC benchmarks.
//!
//! | benchmark | parameter | cost |
//! |---|---|---|
//! | [`sigmoid`] | k categorical levels | 1 − product of per-dimension proximities |
//! | [`luby`] | exponent of the next Luby term | 0/1 per wrong guess |
//! | [`leading_ones`] | number of flipped bits k | 1 per RLS step |
//! | [`toygd`] | learning rate η (log scale) | f(x) − f_min per step |
//! | [`cma`] | CMA-ES step size σ (log scale) | best-so-far f per generation; win rate vs CSA |

pub mod cma;
pub mod generators;
pub mod leading_ones;
pub mod luby;
pub mod sigmoid;
pub mod toygd;

pub use cma::{
    cma_winrate_cost, csa_policy, CmaEnv, CmaFunction, CmaInstance, CmaParams, CmaState,
    WinRateVsCsa,
};
pub use generators::InstanceFile;
pub use leading_ones::{leading_ones, LeadingOnesEnv, LeadingOnesInstance};
pub use luby::{luby, luby_exponent, LubyEnv, LubyInstance};
pub use sigmoid::{sigmoid, SigmoidEnv, SigmoidInstance};
pub use toygd::{ToyGdEnv, ToyGdInstance};
