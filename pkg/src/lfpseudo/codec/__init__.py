from .bitstream import Bitstream
from .core import BlockMode, CodecConfig, EncodeResult, FrameStats, decode_sequence, encode_sequence
from .entropy import BitReader, BitWriter, DecodeError
from .motion import motion_search, predict_mv
from .plan import CodingPlan, StructureConfig, make_plan, scan_order
from .transform import dequantize_inverse, transform_quantize

__all__ = [
    "Bitstream", "BlockMode", "CodecConfig", "EncodeResult", "FrameStats", "decode_sequence", "encode_sequence",
    "BitReader", "BitWriter", "DecodeError", "motion_search", "predict_mv", "CodingPlan", "StructureConfig",
    "make_plan", "scan_order", "dequantize_inverse", "transform_quantize",
]
