"""Frequency-aware compression of video latents with 3D Haar wavelets."""

from .analytics import (
    AutocorrReport,
    EnergyReport,
    channel_overlap,
    lag1_autocorr,
    psnr,
    subband_autocorr,
    subband_energy,
)
from .compression import (
    CompressionConfig,
    PackedLatent,
    PackFormatError,
    SubbandMask,
    adaptive_select,
    apply_mask,
    compress_latent,
    decompress_latent,
    fixed_mask,
    label_mask,
    pack,
    project,
    unpack,
)
from .tensor import (
    TensorFormatError,
    as_video,
    concat_channels,
    load_tensor,
    save_tensor,
    split_channels,
)
from .wavelet import (
    FIXED_RETAINED,
    LABELS,
    DimensionError,
    MultiWTSet,
    SubbandSet,
    haar_analysis_axis,
    haar_synthesis_axis,
    iwt3d,
    multi_iwt,
    multi_wt,
    wt3d,
)

__version__ = "0.1.0"
