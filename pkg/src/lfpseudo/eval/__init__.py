from .bdrate import EvaluationError, bd_rate, bd_rate_curves
from .metrics import DimensionMismatch, Psnr, grid_psnr, psnr

__all__ = ["EvaluationError", "bd_rate", "bd_rate_curves", "DimensionMismatch", "Psnr", "grid_psnr", "psnr"]
