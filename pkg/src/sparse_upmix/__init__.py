"""Sparse multi-resolution MDCT upmixing of first-order ambisonics."""

__version__ = "0.1.0"

from .audio_io import AmbisonicConvention, MultichannelSignal, convert_convention, read_wav, write_wav
from .dictionary import DEFAULT_FRAME_LENGTHS, Dictionary, SparseRepresentation
from .errors import (DimensionError, DivergenceError, UnsupportedFormatError, UpmixError, ValidationError,
                     WavParseError)
from .fieldmap import EnergyMap, energy_map, write_map
from .mdct import LayerSpec, mdct_analyze, mdct_synthesize
from .pipeline import truncate_order, upmix
from .planewave import (FoaComplexBin, FoaRealBin, HarpexEstimate, PlaneWaveEstimate, encode_estimate_foa,
                        extract_harpex, extract_mdct)
from .solver import SolverConfig, SolverTrace, aliasing_loss, alpha_at, solve
from .spherical import sh_encode, sh_omni
