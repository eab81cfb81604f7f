"""WESAD archive to canonical wrist-CSV converter."""

from .convert import (
    ConversionError,
    ConversionManifest,
    convert_subject,
    label_change_points,
    load_archive,
)

__all__ = [
    "ConversionError",
    "ConversionManifest",
    "convert_subject",
    "label_change_points",
    "load_archive",
]
