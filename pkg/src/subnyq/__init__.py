"""Sub-Nyquist multiband acquisition lab.

Simulates a bank of pseudo-random mixing channels whose ADCs may sample
below the analog filter bandwidth on purpose, builds the matching
closed-form sensing models, recovers sparse multiband spectra with a greedy
joint solver, and reproduces the rank/recovery experiments at desk scale.
"""

from .errors import BandPlacementError, ConfigError, CoprimalityError
from .frontend import (MeasurementSet, acquire, channel_output, channelize,
                       dump_measurements_csv, model_predict,
                       relative_model_error)
from .harness import (CurvePoint, ExperimentPlan, coprime_q_values,
                      minimal_rate_90, monotonicity_violations, preset_config,
                      run_pipeline_check, run_recovery_sweep, run_spark_map,
                      wilson_interval, write_curve_svg)
from .indexing import (WindowContext, brute_force_expansion, context_from_params,
                       expansion_terms, gamma, gamma_prime, make_window_context,
                       mu, picking_index, rho, rho_inv, sensing_coeff)
from .params import (DerivedParams, SupportSet, SystemConfig, bin_to_subband,
                     canonical_window, derive_params, format_config_text,
                     max_aliasing_param, parse_config_text, read_config,
                     sampling_efficiency, subband_range, support_from_bands,
                     write_config)
from .prseq import (PRBank, build_pr_bank, default_l_max, dump_chips_csv,
                    fourier_coeffs, fourier_coeffs_continuous, mseq,
                    pr_waveform_dense, taps_for_length)
from .recovery import (RecoveryResult, dcs_somp, reconstruct_X,
                       support_success)
from .sensing import (FilterResponse, SensingModel, build_Bw, build_D,
                      build_D_fold, build_lpf, column_independence_rate,
                      dump_matrix_csv, has_identical_columns,
                      make_sensing_model)
from .signals import (Band, BandSet, DenseSignal, add_awgn, band_bins,
                      dump_bandset_csv, extract_X2W, gen_fullband,
                      gen_multiband, make_tone, support_from_rows)

__version__ = "0.1.0"
