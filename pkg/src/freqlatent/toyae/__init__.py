"""Desk-scale autoencoder for comparing joint and post-training latent compression."""

from .model import (
    PARAM_NAMES,
    LossParts,
    ToyAEParams,
    decode,
    encode,
    init_params,
    load_params,
    loss_and_grad,
    reconstruct,
    save_params,
)
from .synth import SynthSpec, load_dataset, save_dataset, standard_spec, synth_dataset
from .train import (
    REFERENCE_KL_WEIGHT,
    REFERENCE_LEARNING_RATE,
    TrainConfig,
    TrainingDiverged,
    TrainLog,
    evaluate,
    train,
)
