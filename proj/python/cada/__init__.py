from ._cada import (
    CadaError,
    DataError,
    Forest,
    MomentHistogram,
    evaluate,
    read_channel,
    read_labels,
    segment,
    synth,
    train,
    watershed,
    write_channel,
    write_labels,
)

__all__ = [
    "CadaError",
    "DataError",
    "Forest",
    "MomentHistogram",
    "evaluate",
    "read_channel",
    "read_labels",
    "segment",
    "synth",
    "train",
    "watershed",
    "write_channel",
    "write_labels",
]
