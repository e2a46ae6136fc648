"""Necessary security limits of practical BB84 with realistic sources and detectors."""
from .link_model import (
    ChannelParams,
    DetectorParams,
    ErrorModel,
    LinkBudget,
    UnattainableTransmissionError,
    detection_prob_signal,
    distance_for_transmission,
    error_rate,
    expected_click_rate,
    link_budget,
    sifted_error_fraction,
    transmission,
)
from .photon_statistics import (
    HeraldedPDC,
    HeraldedState,
    PdcAmplitudes,
    PhotonNumberDistribution,
    SinglePhoton,
    SourceModel,
    WeakCoherent,
    heralded_pdc_distribution,
    multi_photon_probability,
    pdc_joint_amplitudes,
    poisson_distribution,
    source_distribution,
)
from .security_bounds import (
    ERROR_THRESHOLD,
    BoundResult,
    SecurityVerdict,
    combined_condition,
    exact_min_transmission,
    honest_detector_wcp_bound,
    max_secure_distance,
    min_transmission,
    min_transmission_single_photon,
    necessary_condition_error,
    necessary_condition_multiphoton,
    numeric_minimize,
    optimal_pdc_chi,
    optimal_wcp_mu,
    pdc_transmission_bound,
    wcp_transmission_bound,
)

__version__ = "0.1.0"
