pub mod channel;
pub mod code;
pub mod construct;
pub mod gf;
pub mod oracle;
pub mod prob;
pub mod sc;
pub mod sim;
pub mod symmetry;
pub mod verify;

pub use channel::{Channel, ChannelConfig, ChannelKind, Output, SymmetryReport, TransitionTable};
pub use code::{CodeConfig, CodeSpec};
pub use construct::{construct_info_set, Construction, ConstructionMethod};
pub use gf::{Field, FieldElement, FieldSpec};
pub use oracle::{exact_average_ser, exact_ser, mc_ser, SerReport};
pub use prob::{format_rational, parse_rational, Rational};
pub use sc::{sc_decode, sc_decode_distribution, DecodeDistribution, ScDecoder, TieRule};
pub use sim::{run_experiment, BerReport, ExperimentConfig, TrialPlan};
pub use verify::{verify, verify_claim, Claim, ClaimReport, VerifyMode};
