"""Multi-garment virtual try-on with a flow-matching transformer, at desk scale."""
from .codec import TokenGrid, decode, encode
from .config import RunConfig, load_config, parse_config
from .dit import ModelConfig, TryOnDiT
from .sampler import SamplerConfig, cached_sample, euler_sample
from .synth import SynthConfig, TryOnSample, gen_sample

__all__ = [
    "ModelConfig",
    "RunConfig",
    "SamplerConfig",
    "SynthConfig",
    "TokenGrid",
    "TryOnDiT",
    "TryOnSample",
    "cached_sample",
    "decode",
    "encode",
    "euler_sample",
    "gen_sample",
    "load_config",
    "parse_config",
]
