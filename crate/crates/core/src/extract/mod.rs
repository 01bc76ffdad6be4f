//! From spectroscopy maps and time traces back to device parameters.

pub mod coherence;
pub mod coupling;
pub mod energies;
pub mod peaks;
pub mod report;

pub use coherence::{
    estimate_rabi_frequency, estimate_t1_chop, estimate_t1_trace, estimate_t2prime, rabi_slope, t1_chop_initial_guess,
    t2prime_from_hwhm, CoherencePoint,
};
pub use coupling::{extract_g_vs_fq, untuned_f0, CouplingExtraction, CouplingPoint};
pub use energies::{
    analyze_pairs, channel_curve, clamp_transmission, determine_n_channels, solve_ej_ec, ChannelChoice, ChannelScore,
    PointEnergies, SpectroscopyExtraction,
};
pub use peaks::{
    find_peaks, map_peaks, noise_scale, pair_peaks, Peak, PeakPair, PeakSet, Polarity, DEFAULT_MIN_PROMINENCE,
};
pub use report::{build_report, DeviceReport, RabiPoint, ReportInputs, Stats};
