"""Desk-scale wavelet U-Net destriping trainer."""

from .data import ImageFolder, StripeConfig, add_stripes
from .nets import (
    DcrBlock,
    DiscriminatorConfig,
    GroupFusion,
    MWUNet,
    MultiScaleDiscriminator,
    MwunetConfig,
    TripletAttention,
)
from .parity import parity_check
from .tlosses import LossWeights, make_extractor
from .train import (
    TrainConfig,
    TrainState,
    TrainingDiverged,
    evaluate_heldout,
    fit,
    load_generator,
    loss_components,
    parameter_checksum,
    train_step,
)

__version__ = "0.1.0"
