"""Design and evaluation tools for filtered multi-camera spectral imaging."""
from .calibration import (CalibrationSample, ColorProjection, apply_divisor,
                          calibration_divisor, cross_validate_lambda, estimate_ssf,
                          fit_color_projection, second_diff_operator, validate_ssf)
from .cube import HsiCube, MultiCamCapture
from .errors import FormatError, GridMismatchError, NoExplanatorySpectrum, NumericalFailure
from .metrics import MetricsReport, evaluate, nse, psnr, sam
from .noise import (CaptureSettings, ExposureCurve, NoiseParams, channel_sigma,
                    exposure_time, fit_noise_params, sample_noise, scene_brightness, sigma)
from .prior import (IlluminantSpectrum, SpectraPrior, kmeans_compress,
                    reflectance_to_radiance, subsample_corpus, validate_prior)
from .simulate import mmse_reconstruct, simulate_capture
from .spectral import (VISIBLE_3NM, VISIBLE_10NM, CameraSSF, FilterTransmittance,
                       RadianceSpectrum, SystemResponse, WavelengthGrid, apply_system,
                       effective_response, resample_spectrum, stack_system)
from .uncertainty import (FilterLibrary, PosteriorModel, PosteriorWeights,
                          UncertaintyReport, conditional_mean, conditional_variance_trace,
                          estimate_v, estimate_v_system, log_likelihood, posterior,
                          search_filters)

__version__ = "0.1.0"
