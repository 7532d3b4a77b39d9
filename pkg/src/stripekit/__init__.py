"""Stripe-noise simulation, Haar directional filtering, and destriping
evaluation toolkit."""

from .errors import (
    DataError,
    ImageReadError,
    StripekitError,
    TensorFormatError,
    UnsupportedImageError,
    UsageError,
)
from .imgcore import (
    PatchSpec,
    check_images,
    extract_patches,
    grad_v,
    load_image,
    read_tensor,
    save_image,
    write_tensor,
)
from .losses import (
    IdentityFeatures,
    LossWeights,
    ScoreSet,
    SeededConvStack,
    loss_adversarial,
    loss_cross,
    loss_cyc_clean,
    loss_cyc_stripe,
    loss_hbgm,
    loss_identity,
    loss_perceptual,
    loss_total,
    make_extractor,
)
from .metrics import SsimParams, gaussian_window, mix_distance, ms_ssim, psnr, ssim
from .stripegen import (
    SgmConfig,
    StripeField,
    apply_sgm,
    sample_stripe_field,
    simulate_batch,
    simulate_item,
)
from .wavelet import (
    HbgmConfig,
    WaveletPyramid,
    haar_decompose,
    haar_reconstruct,
    hbgm,
    pyramid_energy,
)

__version__ = "0.1.0"
