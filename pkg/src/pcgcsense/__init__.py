"""Information limits for sensing phase-covariant bosonic Gaussian channels.

The package pairs closed-form Fisher-information bounds for attenuator-
amplifier channel cascades with an independent truncated-Fock-space oracle
that verifies every formula at desk scale.
"""

__version__ = "0.1.0"

from . import bounds, channels, errors, families, fock, probes, qfi
from .bounds import (
    ResourceBudget,
    ScenarioQfis,
    closed_form_addnoise,
    closed_form_nps,
    closed_form_ps,
    pp_pm_split,
    qcrb,
    qfim_upper_bound,
    scenario_qfis,
)
from .channels import (
    CascadeParams,
    KrausChannel,
    ScenarioId,
    amplifier_kraus,
    apply,
    apply_cascade,
    attenuator_kraus,
    cascade_channel,
    check_phase_covariance,
    compose,
    scenario_cascade,
)
from .fock import (
    DensityOperator,
    FockTruncation,
    StateVector,
    coherent_state,
    mean_photon_number,
    number_state,
    partial_trace,
    phase_shift_unitary,
    thermal_state,
    tmsv_state,
)
from .probes import (
    NdsProbe,
    ProbeSpec,
    amp_output_fidelity,
    augment_probe,
    bhattacharyya,
    conditional_output_fidelity,
    conditional_residual_dist,
    loss_pattern_dist,
    nds_probe,
    nu_coefficient,
)
from .qfi import (
    QFIMatrix,
    StateFamily,
    classical_fim,
    psd_order,
    qfi_from_fidelity,
    qfim_sld,
    sld,
    uhlmann_fidelity,
)
