"""Surface-coil intensity correction for multicoil MRI.

Estimates smooth correction maps from body/surface pre-scan volumes by
regularized least squares and applies them either to sensitivity maps
before SENSE reconstruction or to images afterwards.  Ships a Biot-Savart
digital phantom for end-to-end validation, a volume container format,
and a CLI (``scc``) covering both pipeline flavors.
"""

from .coils import estimate_ssos_maps, ssos_combine
from .correction import (
    SccConfig,
    estimate_g_map,
    estimate_h_map,
    gradient_adjoint,
    gradient_forward,
    interpolate_to_plane,
)
from .estimator import SurfaceCoilCorrection
from .operators import (
    CgConfig,
    CgDivergenceError,
    CgResult,
    ForwardModel,
    apply_adjoint,
    apply_forward,
    cg_solve,
    fft_centered,
    ifft_centered,
)
from .prescan import (
    PrescanConfig,
    PrescanPair,
    apodize_kspace,
    condition_prescan,
    tukey_window_1d,
    zeropad_kspace,
)
from .recon import (
    ReconConfig,
    apply_image_correction,
    correct_sensitivities,
    reconstruct,
    reconstruct_corrected,
    uniform_undersampling_mask,
)
from .simulate import (
    CoilGeometry,
    PhantomSpec,
    Scenario,
    ShapeSpec,
    SimulationResult,
    TruthBundle,
    biot_savart_map,
    default_body_coils,
    default_phantom_spec,
    default_scenario,
    default_surface_coils,
    loop_field,
    make_phantom,
    run_scenario,
    simulate_acquisition,
)
from .volumes import (
    ComplexVolume,
    CorrectionMap,
    DomainError,
    GridMismatchError,
    PlaneSpec,
    SamplingMask,
    SensitivitySet,
    elementwise_scale,
    nmse,
    validate_volume,
)

__version__ = "0.1.0"

__all__ = [
    "CgConfig",
    "CgDivergenceError",
    "CgResult",
    "CoilGeometry",
    "ComplexVolume",
    "CorrectionMap",
    "DomainError",
    "ForwardModel",
    "GridMismatchError",
    "PhantomSpec",
    "PlaneSpec",
    "PrescanConfig",
    "PrescanPair",
    "ReconConfig",
    "SamplingMask",
    "Scenario",
    "SccConfig",
    "SensitivitySet",
    "ShapeSpec",
    "SimulationResult",
    "SurfaceCoilCorrection",
    "TruthBundle",
    "apodize_kspace",
    "apply_adjoint",
    "apply_forward",
    "apply_image_correction",
    "biot_savart_map",
    "cg_solve",
    "condition_prescan",
    "correct_sensitivities",
    "default_body_coils",
    "default_phantom_spec",
    "default_scenario",
    "default_surface_coils",
    "elementwise_scale",
    "estimate_g_map",
    "estimate_h_map",
    "estimate_ssos_maps",
    "fft_centered",
    "gradient_adjoint",
    "gradient_forward",
    "ifft_centered",
    "interpolate_to_plane",
    "loop_field",
    "make_phantom",
    "nmse",
    "reconstruct",
    "reconstruct_corrected",
    "run_scenario",
    "simulate_acquisition",
    "ssos_combine",
    "tukey_window_1d",
    "uniform_undersampling_mask",
    "validate_volume",
    "zeropad_kspace",
]
