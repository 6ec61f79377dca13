"""Toy-scale paired image-to-image GAN for radar BEV enhancement."""

from .augment import OP_NAMES, AugmentConfig, augment_pair
from .data import Manifest, PairRecord, read_image, read_manifest, to_uint8, to_unit, write_png
from .errors import BevGanError, ConfigError, DataError
from .gradcheck import GradCheckReport, gradcheck
from .infer import enhance_array, enhance_dir, load_checkpoint
from .model import (
    PatchDiscriminator,
    UNetGenerator,
    n_layers_for,
    patch_map_size,
    set_dropout_active,
)
from .train import TrainConfig, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "BevGanError",
    "ConfigError",
    "DataError",
    "GradCheckReport",
    "Manifest",
    "OP_NAMES",
    "PairRecord",
    "PatchDiscriminator",
    "TrainConfig",
    "UNetGenerator",
    "augment_pair",
    "enhance_array",
    "enhance_dir",
    "gradcheck",
    "load_checkpoint",
    "n_layers_for",
    "patch_map_size",
    "read_image",
    "read_manifest",
    "save_checkpoint",
    "set_dropout_active",
    "to_uint8",
    "to_unit",
    "train",
    "write_png",
]
