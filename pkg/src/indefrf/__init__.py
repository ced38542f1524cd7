"""Random Fourier features for indefinite kernels via signed spectral measures."""

from .bench import BenchConfig, BenchReport, benchmark_run, min_eigenvalue, relative_frobenius_error
from .data import Dataset, l2_normalize, load_libsvm, parse_libsvm, serialize_libsvm, synthetic_blobs
from .errors import IndefRFError
from .features import (
    FeatureMapModel,
    MappedFeatures,
    approx_gram,
    approx_kernel,
    build_feature_map,
    estimator_mse,
    map_points,
)
from .kernels import KernelSpec, eval_kernel, gram_matrix, ntk_monte_carlo_oracle
from .linear import train_classifier, train_linear_classifier
from .measures import (
    DecomposedMeasure,
    RadialSignedMeasure,
    calibrate,
    compute_mass,
    jordan_split,
    radial_forward_transform,
    radial_inverse_transform,
)
from .sampling import FrequencySample, RngStream, draw_frequencies
from .specfun import bessel_j, radial_char
from .spectra import SpectrumSpec, decompose_kernel, numeric_spectrum, spectrum_of

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
